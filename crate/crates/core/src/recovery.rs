//! Getting the logical qubit back out of a corrupted codeword.
//!
//! Two routes are provided. [`recover_by_decoding`] applies `E†` and detaches
//! the ancilla (with whatever environment it is entangled with); no syndrome
//! is ever read. [`recover_in_place`] instead lets a second, fresh ancilla
//! absorb the syndrome so the codeword is restored without being decoded.

use nalgebra::{DMatrix, DVector};

use crate::codes::{decode, encode_block, QuantumCode};
use crate::error::{Error, Result};
use crate::hilbert::{
    factorization, hermitian_eigen, leading_span, thin_svd, partial_trace, reduced_density, DenseOperator, DensityMatrix,
    FactorizationReport, StateVector, C64, NORM_TOL, ZERO,
};

/// Largest codeword+ancilla register for which the transfer unitary is stored densely.
pub const DENSE_TRANSFER_MAX_QUBITS: usize = 9;

#[derive(Clone, Debug)]
pub enum LogicalState {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

/// What was detached from the logical qubit.
#[derive(Clone, Debug)]
pub struct JunkState {
    /// Ancilla ⊗ environment state, when it factored off as a pure state.
    pub state: Option<StateVector>,
    /// Probability of each ancilla syndrome value, summed over any environment.
    pub syndrome_weights: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct RecoveryOutcome {
    pub logical: LogicalState,
    pub junk: JunkState,
    pub factored: Option<FactorizationReport>,
    /// Codeword left in place by [`recover_in_place`].
    pub restored_codeword: Option<StateVector>,
    pub fidelity: f64,
}

impl RecoveryOutcome {
    pub fn logical_pure(&self) -> Option<&StateVector> {
        match &self.logical {
            LogicalState::Pure(s) => Some(s),
            LogicalState::Mixed(_) => None,
        }
    }
}

/// Borrowed pure or mixed state, for [`fidelity`].
#[derive(Clone, Copy, Debug)]
pub enum StateRef<'a> {
    Pure(&'a StateVector),
    Mixed(&'a DensityMatrix),
}

impl<'a> From<&'a StateVector> for StateRef<'a> {
    fn from(s: &'a StateVector) -> Self {
        StateRef::Pure(s)
    }
}

impl<'a> From<&'a DensityMatrix> for StateRef<'a> {
    fn from(s: &'a DensityMatrix) -> Self {
        StateRef::Mixed(s)
    }
}

impl<'a> From<&'a LogicalState> for StateRef<'a> {
    fn from(s: &'a LogicalState) -> Self {
        match s {
            LogicalState::Pure(p) => StateRef::Pure(p),
            LogicalState::Mixed(m) => StateRef::Mixed(m),
        }
    }
}

/// Eigenvalues below this are treated as zero when taking matrix square roots.
pub const SPECTRAL_FLOOR: f64 = 1e-13;

fn hermitian_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let (values, vectors) = hermitian_eigen(m);
    let root = |e: f64| if e > SPECTRAL_FLOOR { e.sqrt() } else { 0.0 };
    let roots = DVector::from_iterator(values.len(), values.iter().map(|&e| C64::new(root(e), 0.0)));
    &vectors * DMatrix::from_diagonal(&roots) * vectors.adjoint()
}

/// `|⟨a,b⟩|²` for pure states, `⟨ψ|ρ|ψ⟩` for a pure/mixed pair, and the
/// Uhlmann fidelity `‖√ρ √σ‖₁²` for two mixed states.
pub fn fidelity<'a, 'b>(a: impl Into<StateRef<'a>>, b: impl Into<StateRef<'b>>) -> Result<f64> {
    match (a.into(), b.into()) {
        (StateRef::Pure(x), StateRef::Pure(y)) => Ok(x.inner(y)?.norm_sqr()),
        (StateRef::Pure(x), StateRef::Mixed(r)) | (StateRef::Mixed(r), StateRef::Pure(x)) => r.expectation(x),
        (StateRef::Mixed(r), StateRef::Mixed(s)) => {
            if r.dim() != s.dim() {
                return Err(Error::DimensionMismatch { expected: r.dim(), found: s.dim() });
            }
            let product = hermitian_sqrt(r.matrix()) * hermitian_sqrt(s.matrix());
            let (_, singular, _) = thin_svd(&product);
            Ok(singular.iter().sum::<f64>().powi(2))
        }
    }
}

/// Squared norm of each ancilla syndrome value in a state whose leading
/// `ancilla_qubits` factors are the ancilla.
fn syndrome_weights(state: &StateVector, syndromes: usize) -> Vec<f64> {
    let rest = state.dim() / syndromes;
    let mut w = vec![0.0; syndromes];
    for (i, amp) in state.amplitudes().iter().enumerate() {
        w[i / rest] += amp.norm_sqr();
    }
    w
}

/// Reduced logical state after decoding, whether or not the corruption was corrigible.
pub fn decoded_logical_density(code: &QuantumCode, corrupted: &StateVector) -> Result<DensityMatrix> {
    reduced_density(&decode(code, corrupted)?, &[0])
}

/// Decodes and detaches the logical qubit. `reference` is the logical input
/// the fidelity is measured against.
pub fn recover_by_decoding(code: &QuantumCode, corrupted: &StateVector, reference: &StateVector) -> Result<RecoveryOutcome> {
    recover_by_decoding_keeping(code, corrupted, reference, &[])
}

/// As [`recover_by_decoding`], but the logical side of the cut also keeps the
/// listed trailing factors (indices counted among the factors after the
/// codeword qubits), e.g. an entangled partner qubit. `reference` lives on
/// (logical, kept factors…).
pub fn recover_by_decoding_keeping(
    code: &QuantumCode,
    corrupted: &StateVector,
    reference: &StateVector,
    kept_extras: &[usize],
) -> Result<RecoveryOutcome> {
    let decoded = decode(code, corrupted)?;
    let mut left = vec![0];
    left.extend(kept_extras.iter().map(|e| code.n_physical() + e));
    let report = factorization(&decoded, &left)?;
    let second = report.second_schmidt();
    if !report.is_product {
        return Err(Error::NotCorrigible { measure: second });
    }
    let logical = report.left_factor.clone().expect("product has factors");
    let junk = report.right_factor.clone().expect("product has factors");
    let fidelity = fidelity(&logical, reference)?;
    let weights = syndrome_weights(&junk, code.syndrome_count());
    Ok(RecoveryOutcome {
        logical: LogicalState::Pure(logical),
        junk: JunkState { state: Some(junk), syndrome_weights: weights },
        factored: Some(report),
        restored_codeword: None,
        fidelity,
    })
}

/// `E†ρE`, then the ancilla is traced out. Fails when the reduced logical
/// state is mixed, which is what an incorrigible component produces.
pub fn recover_mixture(code: &QuantumCode, rho: &DensityMatrix, reference: &StateVector) -> Result<RecoveryOutcome> {
    if rho.dim() != code.dim() {
        return Err(Error::DimensionMismatch { expected: code.dim(), found: rho.dim() });
    }
    let decoded = rho.conjugate_by(code.decoding())?;
    let factors = code.physical_factors();
    let decoded = DensityMatrix::from_parts_unchecked(decoded.matrix().clone(), factors);
    let logical = partial_trace(&decoded, &[0])?;
    let impurity = 1.0 - logical.purity();
    if impurity > NORM_TOL {
        return Err(Error::NotCorrigible { measure: impurity });
    }
    let ancilla: Vec<usize> = (1..code.n_physical()).collect();
    let ancilla_rho = partial_trace(&decoded, &ancilla)?;
    let weights = ancilla_rho.matrix().diagonal().iter().map(|c| c.re).collect();
    let fidelity = fidelity(&logical, reference)?;
    Ok(RecoveryOutcome {
        logical: LogicalState::Mixed(logical),
        junk: JunkState { state: None, syndrome_weights: weights },
        factored: None,
        restored_codeword: None,
        fidelity,
    })
}

/// Replaces a detached ancilla (and anything entangled with it) by `|a=0⟩`.
/// `decoded` is laid out as (logical qubit, ancilla, …).
pub fn refresh_ancilla(code: &QuantumCode, decoded: &StateVector) -> Result<StateVector> {
    let report = factorization(decoded, &[0])?;
    if !report.is_product {
        return Err(Error::NotAProduct { second: report.second_schmidt() });
    }
    let logical = report.left_factor.expect("product has factors");
    let fresh = StateVector::basis(&vec![2; code.ancilla_qubits()], 0)?;
    Ok(logical.tensor(&fresh))
}

/// The unitary `|Z_a⟩⊗|b=0⟩ → |Z_0⟩⊗|b=a⟩` on codeword ⊗ second ancilla,
/// of order `2^{2n+1}`.
///
/// It is completed to the whole space as "copy the syndrome, then correct
/// by the copy": in the logical frame
/// `|z⟩|a⟩|b⟩ → |z⟩|a⟩|a⊕b⟩ → |z⟩|b⟩|a⊕b⟩`, conjugated by `E ⊗ 1`.
#[derive(Clone, Debug)]
pub struct SyndromeTransferUnitary {
    ancilla_qubits: usize,
    encoding: DenseOperator,
    decoding: DenseOperator,
    dense: Option<DenseOperator>,
}

fn transfer_permutation(n: usize) -> Vec<usize> {
    // image[(z, a, b)] = (z, b, a ⊕ b), indices packed as z·4^n + a·2^n + b.
    let s = 1usize << n;
    let mut image = vec![0usize; 2 * s * s];
    for z in 0..2 {
        for a in 0..s {
            for b in 0..s {
                image[(z * s + a) * s + b] = (z * s + b) * s + (a ^ b);
            }
        }
    }
    image
}

impl SyndromeTransferUnitary {
    /// Order of the full unitary, `2^{2n+1}`.
    pub fn order(&self) -> usize {
        1 << (2 * self.ancilla_qubits + 1)
    }

    pub fn register_qubits(&self) -> usize {
        2 * self.ancilla_qubits + 1
    }

    /// The dense matrix, present when the register has at most
    /// [`DENSE_TRANSFER_MAX_QUBITS`] qubits.
    pub fn dense(&self) -> Option<&DenseOperator> {
        self.dense.as_ref()
    }

    /// Applies the transfer to the leading `2n+1` qubits of `state`
    /// (codeword then second ancilla), identity on trailing factors.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        let m = leading_span(state.factors(), self.order())?;
        if let Some(dense) = &self.dense {
            let targets: Vec<usize> = (0..m).collect();
            return crate::hilbert::apply_local(dense, &targets, state);
        }
        let rest = state.dim() / self.order();
        let s = 1usize << self.ancilla_qubits;
        let codeword_dim = 2 * s;
        let inner = s * rest;
        // E† on the codeword block: rows index the codeword, columns (b, trailing).
        let block = DMatrix::from_fn(codeword_dim, inner, |c, j| state.amplitude(c * inner + j));
        let logical = self.decoding.matrix() * block;
        let perm = transfer_permutation(self.ancilla_qubits);
        let mut moved = DMatrix::from_element(codeword_dim, inner, ZERO);
        for c in 0..codeword_dim {
            for b in 0..s {
                let target = perm[c * s + b];
                let (tc, tb) = (target / s, target % s);
                for r in 0..rest {
                    moved[(tc, tb * rest + r)] = logical[(c, b * rest + r)];
                }
            }
        }
        let out = self.encoding.matrix() * moved;
        let amps = DVector::from_fn(state.dim(), |i, _| out[(i / inner, i % inner)]);
        StateVector::unnormalized(amps, state.factors().to_vec())
    }

    /// Max amplitude deviation of `T(|Z_a^{(z)}⟩⊗|0⟩)` from `|Z_0^{(z)}⟩⊗|a⟩`
    /// over all `2^{n+1}` specified columns.
    pub fn specified_column_defect(&self, code: &QuantumCode) -> Result<f64> {
        let fresh = StateVector::basis(&vec![2; self.ancilla_qubits], 0)?;
        let mut worst: f64 = 0.0;
        for z in 0..2 {
            for a in 0..code.syndrome_count() {
                let input = code.basis_vector(z, a).tensor(&fresh);
                let out = self.apply(&input)?;
                let target = code.codeword(z).tensor(&StateVector::basis(&vec![2; self.ancilla_qubits], a)?);
                worst = worst.max(out.max_abs_diff(&target));
            }
        }
        Ok(worst)
    }
}

pub fn build_syndrome_transfer(code: &QuantumCode) -> Result<SyndromeTransferUnitary> {
    let n = code.ancilla_qubits();
    let mut transfer = SyndromeTransferUnitary {
        ancilla_qubits: n,
        encoding: code.encoding().clone(),
        decoding: code.decoding().clone(),
        dense: None,
    };
    if transfer.register_qubits() <= DENSE_TRANSFER_MAX_QUBITS {
        let order = transfer.order();
        let factors = vec![2; 2 * n + 1];
        let perm = transfer_permutation(n);
        let mut p = DMatrix::from_element(order, order, ZERO);
        for (src, &dst) in perm.iter().enumerate() {
            p[(dst, src)] = C64::new(1.0, 0.0);
        }
        let lift = code.encoding().kron(&DenseOperator::identity(&[1 << n]));
        let m = lift.matrix() * p * lift.matrix().adjoint();
        transfer.dense = Some(DenseOperator::new(m, factors)?);
    }
    Ok(transfer)
}

/// Brings in a fresh second ancilla `|b=0⟩` right after the codeword, applies
/// the transfer, and checks that the codeword came out unentangled and inside
/// the error-free code space. Trailing factors of `corrupted` are untouched.
pub fn recover_in_place(
    code: &QuantumCode,
    corrupted: &StateVector,
    transfer: &SyndromeTransferUnitary,
    reference: &StateVector,
) -> Result<RecoveryOutcome> {
    let n = code.ancilla_qubits();
    if transfer.ancilla_qubits != n {
        return Err(Error::DimensionMismatch { expected: n, found: transfer.ancilla_qubits });
    }
    let m = leading_span(corrupted.factors(), code.dim())?;
    let extras = corrupted.factors().len() - m;
    let joint = corrupted.tensor(&StateVector::basis(&vec![2; n], 0)?);
    // Move the fresh ancilla (currently last) in front of the trailing factors.
    let mut order: Vec<usize> = (0..m).collect();
    order.extend(m + extras..m + extras + n);
    order.extend(m..m + extras);
    let joint = joint.permute_factors(&order)?;
    let joint = joint.with_factors(
        std::iter::repeat(2)
            .take(2 * n + 1)
            .chain(corrupted.factors()[m..].iter().copied())
            .collect(),
    )?;
    let after = transfer.apply(&joint)?;

    let codeword_side: Vec<usize> = (0..code.n_physical()).collect();
    let report = factorization(&after, &codeword_side)?;
    if !report.is_product {
        return Err(Error::NotCorrigible { measure: report.second_schmidt() });
    }
    let restored = report.left_factor.clone().expect("product has factors");
    let alpha = code.codeword(0).inner(&restored)?;
    let beta = code.codeword(1).inner(&restored)?;
    let outside = (1.0 - alpha.norm_sqr() - beta.norm_sqr()).abs();
    if outside > NORM_TOL {
        return Err(Error::NotCorrigible { measure: outside });
    }
    let logical = StateVector::qubit(alpha, beta)?;
    let junk = report.right_factor.clone().expect("product has factors");
    let weights = syndrome_weights(&junk, code.syndrome_count());
    let fidelity = fidelity(&logical, reference)?;
    Ok(RecoveryOutcome {
        logical: LogicalState::Pure(logical),
        junk: JunkState { state: Some(junk), syndrome_weights: weights },
        factored: Some(report),
        restored_codeword: Some(restored),
        fidelity,
    })
}

/// Decode, swap in a fresh ancilla, and re-encode: one full refresh cycle.
pub fn refresh_cycle(code: &QuantumCode, corrupted: &StateVector) -> Result<StateVector> {
    let decoded = decode(code, corrupted)?;
    let fresh = refresh_ancilla(code, &decoded)?;
    encode_block(code, &fresh)
}
