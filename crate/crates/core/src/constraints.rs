//! Gauge freedom and constraints on the codeword space.
//!
//! Only the span of `|0_0⟩, |1_0⟩` carries meaning ("legal" states). Ancilla
//! unitaries lifted through `E` are gauge transformations: they move syndrome
//! content around without touching the logical qubit. The orthogonal
//! complement is spanned by the constraint vectors `C_α = E(|z′⟩⊗|a⟩)`,
//! `a ≠ 0`, and Hermitian operators built on them annihilate every legal
//! state and close under commutation.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::codes::{encode_block, QuantumCode};
use crate::error::{Error, Result};
use crate::hilbert::{
    apply_local, embed, haar_unitary, seeded_rng, DenseOperator, StateVector, C64, I, NORM_TOL, ONE,
    UNITARY_TOL, ZERO,
};

/// Tolerance on the orthonormality and legality invariants of a constraint set.
pub const BASIS_TOL: f64 = 1e-12;
/// Tolerance for "maps legal states into legal states" and `Mψ = 0` checks.
pub const LEGAL_TOL: f64 = 1e-10;

/// `1 ⊕ g′` with `g′` Haar-random of order `2^n − 1`; fixes `|a=0⟩` exactly.
pub fn little_group_element_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<DenseOperator> {
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    let dim = 1usize << n;
    let inner = haar_unitary(dim - 1, rng);
    let mut m = DMatrix::from_element(dim, dim, ZERO);
    m[(0, 0)] = ONE;
    m.view_mut((1, 1), (dim - 1, dim - 1)).copy_from(inner.matrix());
    DenseOperator::new(m, vec![2; n])
}

pub fn little_group_element(n: usize, seed: u64) -> Result<DenseOperator> {
    little_group_element_with(n, &mut seeded_rng(seed))
}

fn check_order(op: &DenseOperator, expected: usize) -> Result<()> {
    if op.dim() != expected {
        return Err(Error::DimensionMismatch { expected, found: op.dim() });
    }
    Ok(())
}

/// `E(u ⊗ g)E†`.
pub fn legal_lift(code: &QuantumCode, u: &DenseOperator, g: &DenseOperator) -> Result<DenseOperator> {
    check_order(u, 2)?;
    check_order(g, code.syndrome_count())?;
    let inner = u.kron(g).with_factors(vec![2; code.n_physical()])?;
    code.encoding().compose(&inner)?.compose(code.decoding())
}

/// Gauge transformation `G = E(1 ⊗ g)E†`.
pub fn gauge_lift(code: &QuantumCode, g: &DenseOperator) -> Result<DenseOperator> {
    legal_lift(code, &DenseOperator::identity(&[2]), g)
}

/// Logical unitary `U = E(u ⊗ 1)E†`.
pub fn logical_lift(code: &QuantumCode, u: &DenseOperator) -> Result<DenseOperator> {
    check_order(u, 2)?;
    legal_lift(code, u, &DenseOperator::identity(&[code.syndrome_count()]))
}

/// `(E₁⊗E₂)·[u₁₂ ⊗ g₁ ⊗ g₂]·(E₁†⊗E₂†)`, with `u₁₂` acting on the two logical
/// qubits and `g₁, g₂` on the respective ancillas. The result acts on
/// (codeword 1, codeword 2).
pub fn two_qubit_lift(
    code1: &QuantumCode,
    code2: &QuantumCode,
    u12: &DenseOperator,
    g1: &DenseOperator,
    g2: &DenseOperator,
) -> Result<DenseOperator> {
    check_order(u12, 4)?;
    let (s1, s2) = (code1.syndrome_count(), code2.syndrome_count());
    check_order(g1, s1)?;
    check_order(g2, s2)?;
    let logical_frame = u12.kron(g1).kron(g2).with_factors(vec![2, 2, s1, s2])?;
    let aligned = embed(&logical_frame, &[0, 2, 1, 3], &[2, s1, 2, s2])?;
    let enc = code1.encoding().kron(code2.encoding());
    let dec = code1.decoding().kron(code2.decoding());
    let factors = vec![2; code1.n_physical() + code2.n_physical()];
    let aligned = aligned.with_factors(vec![2 * s1, 2 * s2])?;
    let out = enc.with_factors(vec![2 * s1, 2 * s2])?.compose(&aligned)?;
    out.compose(&dec.with_factors(vec![2 * s1, 2 * s2])?)?.with_factors(factors)
}

/// Largest `|⟨Z_a^{(1)}, W Z_b^{(0)}⟩|`: how much `W` leaks the logical-0 sector into the logical-1 sector.
pub fn sector_mixing(code: &QuantumCode, w: &DenseOperator) -> Result<f64> {
    check_order(w, code.dim())?;
    let s = code.syndrome_count();
    let e = code.encoding().matrix();
    let zero_sector = e.columns(0, s);
    let one_sector = e.columns(s, s);
    let block = one_sector.adjoint() * w.matrix() * zero_sector;
    Ok(block.iter().map(|c| c.norm()).fold(0.0, f64::max))
}

#[derive(Debug, PartialEq)]
struct SetData {
    code_name: String,
    ancilla_qubits: usize,
    /// `D × K`, column `α` is `C_α`.
    vectors: DMatrix<C64>,
    /// `D × 2`, the error-free codewords.
    legal: DMatrix<C64>,
}

/// Orthonormal basis of the illegal subspace, ordered `(z′, a)` with `z′`
/// major and `a = 1 … 2^n − 1` minor. Cloning is cheap.
#[derive(Clone, Debug)]
pub struct ConstraintSet {
    data: Arc<SetData>,
}

impl PartialEq for ConstraintSet {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.data, &other.data) || self.data == other.data
    }
}

pub fn constraint_basis(code: &QuantumCode) -> ConstraintSet {
    let s = code.syndrome_count();
    let e = code.encoding().matrix();
    let mut vectors = DMatrix::from_element(code.dim(), 2 * (s - 1), ZERO);
    for z in 0..2 {
        for a in 1..s {
            vectors.set_column(z * (s - 1) + a - 1, &e.column(z * s + a));
        }
    }
    let mut legal = DMatrix::from_element(code.dim(), 2, ZERO);
    legal.set_column(0, &e.column(0));
    legal.set_column(1, &e.column(s));
    ConstraintSet {
        data: Arc::new(SetData {
            code_name: code.name().to_string(),
            ancilla_qubits: code.ancilla_qubits(),
            vectors,
            legal,
        }),
    }
}

impl ConstraintSet {
    pub fn code_name(&self) -> &str {
        &self.data.code_name
    }

    /// `2(2^n − 1)`.
    pub fn count(&self) -> usize {
        self.data.vectors.ncols()
    }

    /// Dimension of the codeword space, `2^{n+1}`.
    pub fn space_dim(&self) -> usize {
        self.data.vectors.nrows()
    }

    pub fn vectors(&self) -> &DMatrix<C64> {
        &self.data.vectors
    }

    pub fn vector(&self, alpha: usize) -> StateVector {
        StateVector::unnormalized(self.data.vectors.column(alpha).into_owned(), self.factors())
            .expect("dimensions agree")
    }

    /// `(z′, a)` label of `C_α`.
    pub fn label(&self, alpha: usize) -> (usize, usize) {
        let per = (1usize << self.data.ancilla_qubits) - 1;
        (alpha / per, alpha % per + 1)
    }

    fn factors(&self) -> Vec<usize> {
        vec![2; self.data.ancilla_qubits + 1]
    }

    /// `max |⟨C_α, C_β⟩ − δ_{αβ}|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let gram = self.data.vectors.adjoint() * &self.data.vectors;
        let mut worst: f64 = 0.0;
        for i in 0..gram.nrows() {
            for j in 0..gram.ncols() {
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((gram[(i, j)] - target).norm());
            }
        }
        worst
    }

    /// `max |⟨C_α, z_0⟩|`, which bounds `|⟨C_α, encode(ψ)⟩|` for every logical `ψ`.
    pub fn legal_overlap(&self) -> f64 {
        max_abs(&(self.data.vectors.adjoint() * &self.data.legal))
    }

    /// Largest overlap of `W|z_0⟩` with any `C_α`.
    pub fn legality_residual(&self, w: &DenseOperator) -> Result<f64> {
        check_order(w, self.space_dim())?;
        Ok(max_abs(&(self.data.vectors.adjoint() * w.matrix() * &self.data.legal)))
    }
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// `A` with `W C_α = Σ_β A_{βα} C_β`, so that `A(W₁W₂) = A(W₁)A(W₂)`.
#[derive(Clone, Debug)]
pub struct Representation {
    pub matrix: DenseOperator,
    pub legality_residual: f64,
    /// `max ‖W C_α − Σ_β A_{βα} C_β‖`.
    pub expansion_residual: f64,
}

pub fn representation_matrix(cs: &ConstraintSet, w: &DenseOperator) -> Result<Representation> {
    check_order(w, cs.space_dim())?;
    let deviation = w.unitarity_defect();
    if deviation > UNITARY_TOL {
        return Err(Error::NotUnitary { what: "operator", deviation });
    }
    let legality_residual = cs.legality_residual(w)?;
    if legality_residual > LEGAL_TOL {
        return Err(Error::NotLegal { residual: legality_residual });
    }
    let c = cs.vectors();
    let image = w.matrix() * c;
    let a = c.adjoint() * &image;
    let leftover = image - c * &a;
    let expansion_residual = leftover.column_iter().map(|col| col.norm()).fold(0.0, f64::max);
    let k = cs.count();
    Ok(Representation { matrix: DenseOperator::new(a, vec![k])?, legality_residual, expansion_residual })
}

/// `M = Σ_{αβ} |C_α⟩ M_{αβ} ⟨C_β|` for a Hermitian coefficient matrix.
#[derive(Clone, Debug)]
pub struct ConstraintOperator {
    set: ConstraintSet,
    coeffs: DMatrix<C64>,
    operator: DenseOperator,
}

impl ConstraintOperator {
    pub fn set(&self) -> &ConstraintSet {
        &self.set
    }

    pub fn coeffs(&self) -> &DMatrix<C64> {
        &self.coeffs
    }

    pub fn operator(&self) -> &DenseOperator {
        &self.operator
    }

    /// `max ‖M z_0‖` over the two codewords.
    pub fn legal_residual(&self) -> f64 {
        let image = self.operator.matrix() * &self.set.data.legal;
        image.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

pub fn constraint_operator(cs: &ConstraintSet, coeffs: DMatrix<C64>) -> Result<ConstraintOperator> {
    let k = cs.count();
    if coeffs.nrows() != k || coeffs.ncols() != k {
        return Err(Error::DimensionMismatch { expected: k, found: coeffs.nrows().max(coeffs.ncols()) });
    }
    let deviation = max_abs(&(&coeffs - coeffs.adjoint()));
    if deviation > UNITARY_TOL {
        return Err(Error::NotHermitian { what: "constraint coefficients", deviation });
    }
    let c = cs.vectors();
    let m = c * &coeffs * c.adjoint();
    let operator = DenseOperator::new(m, cs.factors())?;
    let deviation = operator.hermiticity_defect();
    if deviation > BASIS_TOL * (1.0 + max_abs(&coeffs)) {
        return Err(Error::NotHermitian { what: "constraint operator", deviation });
    }
    let out = ConstraintOperator { set: cs.clone(), coeffs, operator };
    let residual = out.legal_residual();
    if residual > LEGAL_TOL {
        return Err(Error::NotLegal { residual });
    }
    Ok(out)
}

/// `P` with `[M, N] = iP`, and the operator-level residual `‖MN − NM − iP‖_max`.
#[derive(Clone, Debug)]
pub struct CommutatorClosure {
    pub p: ConstraintOperator,
    pub residual: f64,
}

pub fn commutator_closure(m: &ConstraintOperator, n: &ConstraintOperator) -> Result<CommutatorClosure> {
    if m.set != n.set {
        return Err(Error::MismatchedConstraintSets);
    }
    let coeffs = (&m.coeffs * &n.coeffs - &n.coeffs * &m.coeffs) * (-I);
    let p = constraint_operator(&m.set, coeffs)?;
    let (mo, no) = (m.operator.matrix(), n.operator.matrix());
    let lhs = mo * no - no * mo;
    let residual = max_abs(&(lhs - p.operator.matrix() * I));
    Ok(CommutatorClosure { p, residual })
}

/// `‖(M₁ ⊗ M₂ ⊗ …) ψ‖` for a state of several codewords laid out in the order of `ops`.
pub fn multi_codeword_constraint(ops: &[ConstraintOperator], psi: &StateVector) -> Result<f64> {
    let dims: Vec<usize> = ops.iter().map(|o| o.set.space_dim()).collect();
    let total: usize = dims.iter().product();
    if total != psi.dim() || ops.is_empty() {
        return Err(Error::FactorMismatch { factors: dims, dim: psi.dim() });
    }
    let mut state = psi.with_factors(dims)?;
    for (i, op) in ops.iter().enumerate() {
        let local = op.operator.with_factors(vec![op.set.space_dim()])?;
        state = apply_local(&local, &[i], &state)?;
    }
    Ok(state.norm())
}

#[derive(Clone, Copy, Debug)]
pub struct ScalarProductCheck {
    /// `⟨Φ, Ψ⟩` between the encoded states.
    pub lhs: C64,
    /// `⟨φ, ψ⟩` between the logical states.
    pub rhs: C64,
    pub deviation: f64,
}

/// Encodes `φ` and `ψ` with the same ancilla state `Σ c_a |a⟩` and compares
/// the inner products before and after.
pub fn scalar_product_check(code: &QuantumCode, phi: &StateVector, psi: &StateVector, c: &[C64]) -> Result<ScalarProductCheck> {
    check_logical(phi)?;
    check_logical(psi)?;
    if c.len() != code.syndrome_count() {
        return Err(Error::DimensionMismatch { expected: code.syndrome_count(), found: c.len() });
    }
    let ancilla = StateVector::unnormalized(DVector::from_column_slice(c), vec![2; code.ancilla_qubits()])?;
    if (ancilla.norm_sqr() - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { what: "syndrome coefficients", norm_sqr: ancilla.norm_sqr() });
    }
    let big_phi = encode_block(code, &phi.tensor(&ancilla))?;
    let big_psi = encode_block(code, &psi.tensor(&ancilla))?;
    let lhs = big_phi.inner(&big_psi)?;
    let rhs = phi.inner(psi)?;
    Ok(ScalarProductCheck { lhs, rhs, deviation: (lhs - rhs).norm() })
}

fn check_logical(s: &StateVector) -> Result<()> {
    if s.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: s.dim() });
    }
    Ok(())
}
