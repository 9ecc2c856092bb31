//! Dense complex linear algebra over small labelled tensor-product spaces.
//!
//! Every state and operator carries its list of subsystem dimensions
//! (`factors`). Factor 0 is the leftmost tensor slot and the most significant
//! digit of a basis index, so `|01001⟩` on five qubits is basis index 9.

use faer::{Mat, MatRef, Side};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Squared-norm and trace tolerance for states and density matrices.
pub const NORM_TOL: f64 = 1e-10;
/// Max-entry tolerance for `U†U = 1` and `M = M†`.
pub const UNITARY_TOL: f64 = 1e-10;
/// Schmidt values at or below this count as zero.
pub const PRODUCT_TOL: f64 = 1e-8;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Deterministic generator used for every random draw in the crate.
pub type SimRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer over `seed + (stream + 1) * φ64`. Used to fan a base
/// seed out into independent per-trial seeds.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn check_factors(factors: &[usize], dim: usize) -> Result<()> {
    if factors.iter().product::<usize>() != dim || factors.iter().any(|&f| f == 0) {
        return Err(Error::FactorMismatch { factors: factors.to_vec(), dim });
    }
    Ok(())
}

fn check_subset(subset: &[usize], len: usize) -> Result<()> {
    let mut seen = vec![false; len];
    for &i in subset {
        if i >= len {
            return Err(Error::IndexOutOfRange { index: i, limit: len });
        }
        if seen[i] {
            return Err(Error::DuplicateIndex(i));
        }
        seen[i] = true;
    }
    Ok(())
}

fn complement(subset: &[usize], len: usize) -> Vec<usize> {
    (0..len).filter(|i| !subset.contains(i)).collect()
}

/// Contribution to the full basis index of every local multi-index over
/// `subset` (enumerated with `subset[0]` most significant).
fn offsets(factors: &[usize], subset: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; factors.len()];
    for i in (0..factors.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * factors[i + 1];
    }
    let mut out = vec![0usize];
    for &f in subset {
        let mut next = Vec::with_capacity(out.len() * factors[f]);
        for &base in &out {
            for d in 0..factors[f] {
                next.push(base + d * strides[f]);
            }
        }
        out = next;
    }
    out
}

/// A complex amplitude vector over a labelled tensor factorization.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: DVector<C64>,
    factors: Vec<usize>,
}

impl StateVector {
    /// Builds a normalized state; fails if the squared norm is off by more than `NORM_TOL`.
    pub fn new(amplitudes: DVector<C64>, factors: Vec<usize>) -> Result<Self> {
        let state = Self::unnormalized(amplitudes, factors)?;
        let norm_sqr = state.norm_sqr();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { what: "state", norm_sqr });
        }
        Ok(state)
    }

    /// Builds a possibly sub-normalized vector (branch vectors, components).
    pub fn unnormalized(amplitudes: DVector<C64>, factors: Vec<usize>) -> Result<Self> {
        check_factors(&factors, amplitudes.len())?;
        Ok(Self { amplitudes, factors })
    }

    pub fn from_vec(amplitudes: Vec<C64>, factors: Vec<usize>) -> Result<Self> {
        Self::new(DVector::from_vec(amplitudes), factors)
    }

    pub fn basis(factors: &[usize], index: usize) -> Result<Self> {
        let dim: usize = factors.iter().product();
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, limit: dim });
        }
        let mut amplitudes = DVector::from_element(dim, ZERO);
        amplitudes[index] = ONE;
        Self::unnormalized(amplitudes, factors.to_vec())
    }

    /// Computational basis state of `bits.len()` qubits, leftmost bit first.
    pub fn from_bits(bits: &[u8]) -> Self {
        let index = bits.iter().fold(0usize, |acc, &b| (acc << 1) | usize::from(b & 1));
        Self::basis(&vec![2; bits.len()], index).expect("index fits")
    }

    pub fn zeros(factors: &[usize]) -> Self {
        let dim = factors.iter().product();
        Self { amplitudes: DVector::from_element(dim, ZERO), factors: factors.to_vec() }
    }

    /// `alpha|0⟩ + beta|1⟩`.
    pub fn qubit(alpha: C64, beta: C64) -> Result<Self> {
        Self::from_vec(vec![alpha, beta], vec![2])
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amplitudes[index]
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOL
    }

    /// `⟨self, other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let mut amplitudes = DVector::from_element(self.dim() * other.dim(), ZERO);
        for (i, a) in self.amplitudes.iter().enumerate() {
            for (j, b) in other.amplitudes.iter().enumerate() {
                amplitudes[i * other.dim() + j] = a * b;
            }
        }
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        StateVector { amplitudes, factors }
    }

    pub fn scaled(&self, c: C64) -> StateVector {
        StateVector { amplitudes: &self.amplitudes * c, factors: self.factors.clone() }
    }

    /// Componentwise sum; factor labels are taken from `self`.
    pub fn add(&self, other: &StateVector) -> Result<StateVector> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(StateVector { amplitudes: &self.amplitudes + &other.amplitudes, factors: self.factors.clone() })
    }

    pub fn normalized(&self) -> StateVector {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        self.scaled(C64::new(1.0 / n, 0.0))
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Relabels the factorization without touching amplitudes.
    pub fn with_factors(&self, factors: Vec<usize>) -> Result<StateVector> {
        StateVector::unnormalized(self.amplitudes.clone(), factors)
    }

    /// Reorders tensor factors: factor `order[i]` of `self` becomes factor `i`.
    pub fn permute_factors(&self, order: &[usize]) -> Result<StateVector> {
        if order.len() != self.factors.len() {
            return Err(Error::DimensionMismatch { expected: self.factors.len(), found: order.len() });
        }
        check_subset(order, self.factors.len())?;
        let src = offsets(&self.factors, order);
        let amplitudes = DVector::from_iterator(self.dim(), src.iter().map(|&i| self.amplitudes[i]));
        let factors = order.iter().map(|&i| self.factors[i]).collect();
        Ok(StateVector { amplitudes, factors })
    }
}

/// `a ⊗ b`.
pub fn tensor(a: &StateVector, b: &StateVector) -> StateVector {
    a.tensor(b)
}

/// A square complex matrix acting on a labelled tensor space.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    matrix: DMatrix<C64>,
    factors: Vec<usize>,
}

impl DenseOperator {
    pub fn new(matrix: DMatrix<C64>, factors: Vec<usize>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), found: matrix.ncols() });
        }
        check_factors(&factors, matrix.nrows())?;
        Ok(Self { matrix, factors })
    }

    /// Square matrix from row-major real entries.
    pub fn from_real_rows(rows: &[&[f64]], factors: Vec<usize>) -> Result<Self> {
        let n = rows.len();
        let matrix = DMatrix::from_fn(n, n, |i, j| C64::new(rows[i].get(j).copied().unwrap_or(0.0), 0.0));
        Self::new(matrix, factors)
    }

    pub fn identity(factors: &[usize]) -> Self {
        let dim = factors.iter().product();
        Self { matrix: DMatrix::identity(dim, dim), factors: factors.to_vec() }
    }

    pub fn zeros(factors: &[usize]) -> Self {
        let dim = factors.iter().product();
        Self { matrix: DMatrix::from_element(dim, dim, ZERO), factors: factors.to_vec() }
    }

    pub fn pauli_x() -> Self {
        Self::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]], vec![2]).unwrap()
    }

    pub fn pauli_z() -> Self {
        Self::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]], vec![2]).unwrap()
    }

    pub fn pauli_y() -> Self {
        let m = DMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]);
        Self::new(m, vec![2]).unwrap()
    }

    pub fn hadamard() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_real_rows(&[&[h, h], &[h, -h]], vec![2]).unwrap()
    }

    /// Controlled-NOT with the first qubit as control.
    pub fn cnot() -> Self {
        Self::from_real_rows(
            &[&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 0.0, 1.0], &[0.0, 0.0, 1.0, 0.0]],
            vec![2, 2],
        )
        .unwrap()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    pub fn column(&self, col: usize) -> StateVector {
        StateVector { amplitudes: self.matrix.column(col).into_owned(), factors: self.factors.clone() }
    }

    pub fn adjoint(&self) -> DenseOperator {
        DenseOperator { matrix: self.matrix.adjoint(), factors: self.factors.clone() }
    }

    pub fn transpose(&self) -> DenseOperator {
        DenseOperator { matrix: self.matrix.transpose(), factors: self.factors.clone() }
    }

    /// `self · other`.
    pub fn compose(&self, other: &DenseOperator) -> Result<DenseOperator> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(DenseOperator { matrix: &self.matrix * &other.matrix, factors: self.factors.clone() })
    }

    pub fn kron(&self, other: &DenseOperator) -> DenseOperator {
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        DenseOperator { matrix: self.matrix.kronecker(&other.matrix), factors }
    }

    pub fn scaled(&self, c: C64) -> DenseOperator {
        DenseOperator { matrix: &self.matrix * c, factors: self.factors.clone() }
    }

    pub fn add(&self, other: &DenseOperator) -> Result<DenseOperator> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(DenseOperator { matrix: &self.matrix + &other.matrix, factors: self.factors.clone() })
    }

    pub fn sub(&self, other: &DenseOperator) -> Result<DenseOperator> {
        self.add(&other.scaled(-ONE))
    }

    pub fn with_factors(&self, factors: Vec<usize>) -> Result<DenseOperator> {
        DenseOperator::new(self.matrix.clone(), factors)
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &DenseOperator) -> f64 {
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |(U†U − 1)_ij|`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim();
        let prod = self.matrix.adjoint() * &self.matrix;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((prod[(i, j)] - target).norm());
            }
        }
        worst
    }

    /// `max |(M − M†)_ij|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_defect() <= UNITARY_TOL
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() <= UNITARY_TOL
    }

    pub fn is_real(&self) -> bool {
        self.matrix.iter().all(|c| c.im == 0.0)
    }
}

/// `U · psi`. The result keeps the factor labels of `psi`.
pub fn apply(op: &DenseOperator, psi: &StateVector) -> Result<StateVector> {
    if op.dim() != psi.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), found: psi.dim() });
    }
    Ok(StateVector { amplitudes: &op.matrix * &psi.amplitudes, factors: psi.factors.clone() })
}

fn check_targets(op: &DenseOperator, targets: &[usize], full_factors: &[usize]) -> Result<()> {
    check_subset(targets, full_factors.len())?;
    let local: usize = targets.iter().map(|&t| full_factors[t]).product();
    if local != op.dim() {
        return Err(Error::DimensionMismatch { expected: local, found: op.dim() });
    }
    Ok(())
}

/// Applies `op` to the factors listed in `targets` (in that order), identity
/// elsewhere, without materializing the full operator.
pub fn apply_local(op: &DenseOperator, targets: &[usize], psi: &StateVector) -> Result<StateVector> {
    check_targets(op, targets, &psi.factors)?;
    let rest = complement(targets, psi.factors.len());
    let t_off = offsets(&psi.factors, targets);
    let r_off = offsets(&psi.factors, &rest);
    let mut out = DVector::from_element(psi.dim(), ZERO);
    let mut local = DVector::from_element(t_off.len(), ZERO);
    for &r in &r_off {
        for (l, &t) in t_off.iter().enumerate() {
            local[l] = psi.amplitudes[r + t];
        }
        let image = &op.matrix * &local;
        for (l, &t) in t_off.iter().enumerate() {
            out[r + t] = image[l];
        }
    }
    Ok(StateVector { amplitudes: out, factors: psi.factors.clone() })
}

/// Number of leading factors whose dimensions multiply to exactly `dim`.
pub fn leading_span(factors: &[usize], dim: usize) -> Result<usize> {
    let mut acc = 1usize;
    for (i, &f) in factors.iter().enumerate() {
        if acc == dim {
            return Ok(i);
        }
        acc *= f;
    }
    if acc == dim {
        return Ok(factors.len());
    }
    Err(Error::FactorMismatch { factors: factors.to_vec(), dim })
}

/// Applies `op` to the leading factors of `psi` that it spans.
pub fn apply_leading(op: &DenseOperator, psi: &StateVector) -> Result<StateVector> {
    let m = leading_span(&psi.factors, op.dim())?;
    let targets: Vec<usize> = (0..m).collect();
    apply_local(op, &targets, psi)
}

/// Lifts `op` on `targets` to the whole space by identity padding.
pub fn embed(op: &DenseOperator, targets: &[usize], full_factors: &[usize]) -> Result<DenseOperator> {
    check_targets(op, targets, full_factors)?;
    let rest = complement(targets, full_factors.len());
    let t_off = offsets(full_factors, targets);
    let r_off = offsets(full_factors, &rest);
    let dim = full_factors.iter().product();
    let mut matrix = DMatrix::from_element(dim, dim, ZERO);
    for &r in &r_off {
        for (i, &ti) in t_off.iter().enumerate() {
            for (j, &tj) in t_off.iter().enumerate() {
                matrix[(r + ti, r + tj)] = op.matrix[(i, j)];
            }
        }
    }
    Ok(DenseOperator { matrix, factors: full_factors.to_vec() })
}

/// Schmidt analysis of a state across a bipartition of its factors.
#[derive(Clone, Debug)]
pub struct FactorizationReport {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    /// Nonincreasing; there are `min(dim_left, dim_right)` of them.
    pub schmidt_values: Vec<f64>,
    pub is_product: bool,
    /// Normalized left factor, defined when `is_product`.
    pub left_factor: Option<StateVector>,
    /// Right factor carrying the norm of the input, defined when `is_product`.
    pub right_factor: Option<StateVector>,
}

impl FactorizationReport {
    /// Largest Schmidt value past the first; zero for a product state.
    pub fn second_schmidt(&self) -> f64 {
        self.schmidt_values.get(1).copied().unwrap_or(0.0)
    }
}

fn to_faer(m: &DMatrix<C64>) -> Mat<C64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: MatRef<'_, C64>) -> DMatrix<C64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin SVD `m = U diag(s) V†` with `s` nonincreasing.
pub(crate) fn thin_svd(m: &DMatrix<C64>) -> (DMatrix<C64>, Vec<f64>, DMatrix<C64>) {
    let svd = to_faer(m).thin_svd().expect("SVD of a finite matrix converges");
    let s = svd.S().column_vector().iter().map(|c| c.re).collect();
    (from_faer(svd.U()), s, from_faer(svd.V()))
}

/// Eigenvalues (ascending) and eigenvectors of the Hermitian part of `m`.
pub(crate) fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = to_faer(&herm).self_adjoint_eigen(Side::Lower).expect("Hermitian eigensolver converges");
    let values = eig.S().column_vector().iter().map(|c| c.re).collect();
    (values, from_faer(eig.U()))
}

/// Singular-value test across the cut `left | rest`. `left` may list factors in
/// any order; the right side keeps the remaining factors in their original order.
pub fn factorization(psi: &StateVector, left: &[usize]) -> Result<FactorizationReport> {
    check_subset(left, psi.factors.len())?;
    let right = complement(left, psi.factors.len());
    if left.is_empty() || right.is_empty() {
        return Err(Error::EmptyCut);
    }
    let l_off = offsets(&psi.factors, left);
    let r_off = offsets(&psi.factors, &right);
    let m = DMatrix::from_fn(l_off.len(), r_off.len(), |i, j| psi.amplitudes[l_off[i] + r_off[j]]);
    let (u, schmidt_values, v) = thin_svd(&m);
    let is_product = schmidt_values.iter().skip(1).all(|&s| s <= PRODUCT_TOL);

    let left_factors: Vec<usize> = left.iter().map(|&i| psi.factors[i]).collect();
    let right_factors: Vec<usize> = right.iter().map(|&i| psi.factors[i]).collect();
    let (left_factor, right_factor) = if is_product && schmidt_values[0] > 0.0 {
        let s = schmidt_values[0];
        let lf = StateVector { amplitudes: u.column(0).into_owned(), factors: left_factors };
        let rf = StateVector {
            amplitudes: DVector::from_iterator(r_off.len(), v.column(0).iter().map(|c| c.conj() * s)),
            factors: right_factors,
        };
        (Some(lf), Some(rf))
    } else if is_product {
        (Some(StateVector::zeros(&left_factors)), Some(StateVector::zeros(&right_factors)))
    } else {
        (None, None)
    };

    Ok(FactorizationReport { left: left.to_vec(), right, schmidt_values, is_product, left_factor, right_factor })
}

/// Positive semidefinite, unit-trace matrix over a labelled tensor space.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<C64>,
    factors: Vec<usize>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and eigenvalues ≥ `-NORM_TOL`.
    pub fn new(matrix: DMatrix<C64>, factors: Vec<usize>) -> Result<Self> {
        let op = DenseOperator::new(matrix, factors)?;
        let herm = op.hermiticity_defect();
        if herm > UNITARY_TOL {
            return Err(Error::InvalidDensity(format!("not Hermitian (deviation {herm:e})")));
        }
        let rho = Self { matrix: op.matrix, factors: op.factors };
        let tr = rho.trace();
        if (tr - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        let min = rho.eigenvalues().first().copied().unwrap_or(0.0);
        if min < -NORM_TOL {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min:e}")));
        }
        Ok(rho)
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        let a = &psi.amplitudes;
        Self { matrix: a * a.adjoint(), factors: psi.factors.clone() }
    }

    /// `Σ p_j |ψ_j⟩⟨ψ_j|`.
    pub fn mixture(terms: &[(f64, StateVector)]) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidProbabilities("empty mixture".into()))?;
        let dim = first.1.dim();
        let mut matrix = DMatrix::from_element(dim, dim, ZERO);
        for (p, psi) in terms {
            if psi.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: psi.dim() });
            }
            let a = &psi.amplitudes;
            matrix += a * a.adjoint() * C64::new(*p, 0.0);
        }
        Self::new(matrix, first.1.factors.clone())
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|c| c.re).sum()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.matrix).0
    }

    /// `Tr(ρ σ)`.
    pub fn overlap(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(self.matrix.iter().zip(other.matrix.transpose().iter()).map(|(a, b)| (a * b).re).sum())
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expectation(&self, psi: &StateVector) -> Result<f64> {
        if self.dim() != psi.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: psi.dim() });
        }
        Ok(psi.amplitudes.dotc(&(&self.matrix * &psi.amplitudes)).re)
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `U ρ U†`.
    pub fn conjugate_by(&self, op: &DenseOperator) -> Result<DensityMatrix> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: op.dim() });
        }
        Ok(DensityMatrix { matrix: &op.matrix * &self.matrix * op.matrix.adjoint(), factors: self.factors.clone() })
    }

    pub(crate) fn from_parts_unchecked(matrix: DMatrix<C64>, factors: Vec<usize>) -> Self {
        Self { matrix, factors }
    }
}

/// Traces out every factor not in `keep`; the result's factors follow `keep`'s order.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    check_subset(keep, rho.factors.len())?;
    if keep.is_empty() {
        return Err(Error::EmptyCut);
    }
    let traced = complement(keep, rho.factors.len());
    let k_off = offsets(&rho.factors, keep);
    let t_off = offsets(&rho.factors, &traced);
    let matrix = DMatrix::from_fn(k_off.len(), k_off.len(), |i, j| {
        t_off.iter().map(|&t| rho.matrix[(k_off[i] + t, k_off[j] + t)]).sum()
    });
    let factors = keep.iter().map(|&i| rho.factors[i]).collect();
    Ok(DensityMatrix { matrix, factors })
}

/// Reduced state of a pure vector on `keep`, without forming `|ψ⟩⟨ψ|`.
pub fn reduced_density(psi: &StateVector, keep: &[usize]) -> Result<DensityMatrix> {
    check_subset(keep, psi.factors.len())?;
    if keep.is_empty() {
        return Err(Error::EmptyCut);
    }
    let traced = complement(keep, psi.factors.len());
    let k_off = offsets(&psi.factors, keep);
    let t_off = offsets(&psi.factors, &traced);
    let m = DMatrix::from_fn(k_off.len(), t_off.len(), |i, t| psi.amplitudes[k_off[i] + t_off[t]]);
    let factors = keep.iter().map(|&i| psi.factors[i]).collect();
    Ok(DensityMatrix { matrix: &m * m.adjoint(), factors })
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-random unitary: QR of a complex Ginibre matrix with the phases of
/// `diag(R)` folded back into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DenseOperator {
    let ginibre = DMatrix::from_fn(dim, dim, |_, _| complex_gaussian(rng));
    let qr = ginibre.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    DenseOperator { matrix: q, factors: vec![dim] }
}

/// Haar-random unitary of order `dim`, deterministic in `seed`.
pub fn random_unitary(dim: usize, seed: u64) -> Result<DenseOperator> {
    if dim == 0 {
        return Err(Error::ZeroDimension);
    }
    Ok(haar_unitary(dim, &mut seeded_rng(seed)))
}

/// Uniformly random normalized state over `factors`.
pub fn random_state<R: Rng + ?Sized>(factors: &[usize], rng: &mut R) -> StateVector {
    let dim: usize = factors.iter().product();
    let v = DVector::from_fn(dim, |_, _| complex_gaussian(rng));
    StateVector { amplitudes: v, factors: factors.to_vec() }.normalized()
}

/// Random Hermitian matrix `(A + A†)/2` with complex Gaussian `A`.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<C64> {
    let a = DMatrix::from_fn(dim, dim, |_, _| complex_gaussian(rng));
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Random point on the unit sphere of `C^dim`, as a plain coefficient vector.
pub fn random_coefficients<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C64> {
    random_state(&[dim], rng).into_amplitudes().iter().copied().collect()
}
