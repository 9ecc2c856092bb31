//! Code definitions, the encoding matrix, and structural checks on codewords.
//!
//! A code is fixed by two error-free codewords `|0_0⟩, |1_0⟩` on `n + 1`
//! physical qubits and an ordered list of `2^n` Pauli products `O_a` (the
//! standard errors, `O_0 = 1`). The physical basis is `|Z_a^{(z)}⟩ = O_a|z_0⟩`
//! and the encoding matrix has it as columns: `E(|z⟩⊗|a⟩) = |Z_a^{(z)}⟩`, with
//! `|z⟩` the most significant logical index.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hilbert::{apply_leading, DenseOperator, StateVector, C64, NORM_TOL, ONE, ZERO};

/// Single-qubit factor of a standard error. `W` is the real product `X·Z`
/// (phase flip followed by bit flip).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PauliLabel {
    I,
    X,
    Z,
    W,
}

impl PauliLabel {
    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Self::I),
            'X' => Some(Self::X),
            'Z' => Some(Self::Z),
            'W' => Some(Self::W),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Self::I => 'I',
            Self::X => 'X',
            Self::Z => 'Z',
            Self::W => 'W',
        }
    }

    fn flips(self) -> bool {
        matches!(self, Self::X | Self::W)
    }

    fn phases(self) -> bool {
        matches!(self, Self::Z | Self::W)
    }

    pub fn matrix(self) -> DenseOperator {
        match self {
            Self::I => DenseOperator::identity(&[2]),
            Self::X => DenseOperator::pauli_x(),
            Self::Z => DenseOperator::pauli_z(),
            Self::W => DenseOperator::from_real_rows(&[&[0.0, -1.0], &[1.0, 0.0]], vec![2]).unwrap(),
        }
    }
}

/// Tensor product of single-qubit labels, qubit 0 first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString(Vec<PauliLabel>);

impl PauliString {
    pub fn new(labels: Vec<PauliLabel>) -> Self {
        Self(labels)
    }

    pub fn identity(len: usize) -> Self {
        Self(vec![PauliLabel::I; len])
    }

    /// `label` on `qubit`, identity elsewhere.
    pub fn single(len: usize, qubit: usize, label: PauliLabel) -> Self {
        let mut v = vec![PauliLabel::I; len];
        v[qubit] = label;
        Self(v)
    }

    pub fn labels(&self) -> &[PauliLabel] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&l| l == PauliLabel::I)
    }

    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&l| l != PauliLabel::I).count()
    }

    /// True when no factor carries a phase flip.
    pub fn is_bit_flip_only(&self) -> bool {
        self.0.iter().all(|l| !l.phases())
    }

    fn masks(&self) -> (usize, usize) {
        let n = self.0.len();
        let mut x = 0usize;
        let mut z = 0usize;
        for (q, l) in self.0.iter().enumerate() {
            let bit = 1usize << (n - 1 - q);
            if l.flips() {
                x |= bit;
            }
            if l.phases() {
                z |= bit;
            }
        }
        (x, z)
    }

    /// `O|i⟩ = (−1)^{|i ∧ z|} |i ⊕ x⟩` on the computational basis.
    pub fn apply_to(&self, amplitudes: &DVector<C64>) -> Result<DVector<C64>> {
        let dim = 1usize << self.0.len();
        if amplitudes.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: amplitudes.len() });
        }
        let (x, z) = self.masks();
        let mut out = DVector::from_element(dim, ZERO);
        for i in 0..dim {
            let sign = if (i & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            out[i ^ x] = amplitudes[i] * sign;
        }
        Ok(out)
    }

    pub fn operator(&self) -> DenseOperator {
        self.0
            .iter()
            .map(|l| l.matrix())
            .reduce(|a, b| a.kron(&b))
            .unwrap_or_else(|| DenseOperator::identity(&[1]))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| {
                PauliLabel::from_char(c).ok_or_else(|| Error::Parse {
                    field: "standard_errors".into(),
                    message: format!("unexpected label `{c}` in `{s}` (allowed: I, X, Z, W)"),
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

/// Declarative description of a code.
#[derive(Clone, Debug, PartialEq)]
pub struct CodeSpec {
    pub name: String,
    pub n_physical: usize,
    /// `|0_0⟩` and `|1_0⟩`.
    pub logical_basis: [StateVector; 2],
    /// `O_0 … O_{2^n − 1}`; the position in this list is the syndrome.
    pub standard_errors: Vec<PauliString>,
}

impl CodeSpec {
    /// Number of ancilla qubits `n`.
    pub fn ancilla_qubits(&self) -> usize {
        self.n_physical.saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_physical < 2 {
            return Err(Error::InvalidSpec(format!("n_physical = {} (need at least 2)", self.n_physical)));
        }
        let dim = 1usize << self.n_physical;
        for (z, state) in self.logical_basis.iter().enumerate() {
            if state.dim() != dim {
                return Err(Error::InvalidSpec(format!(
                    "logical basis state {z} has dimension {}, expected {dim}",
                    state.dim()
                )));
            }
            if !state.is_normalized() {
                return Err(Error::InvalidSpec(format!(
                    "logical basis state {z} has squared norm {}",
                    state.norm_sqr()
                )));
            }
        }
        let overlap = self.logical_basis[0].inner(&self.logical_basis[1])?.norm();
        if overlap > NORM_TOL {
            return Err(Error::InvalidSpec(format!("logical basis states overlap by {overlap:e}")));
        }
        let expected = 1usize << self.ancilla_qubits();
        if self.standard_errors.len() != expected {
            return Err(Error::InvalidSpec(format!(
                "{} standard errors listed, expected 2^{} = {expected}",
                self.standard_errors.len(),
                self.ancilla_qubits()
            )));
        }
        if let Some((i, bad)) = self.standard_errors.iter().enumerate().find(|(_, e)| e.len() != self.n_physical) {
            return Err(Error::InvalidSpec(format!("standard error {i} (`{bad}`) does not span {} qubits", self.n_physical)));
        }
        if !self.standard_errors[0].is_identity() {
            return Err(Error::InvalidSpec("standard error 0 must be the identity".into()));
        }
        Ok(())
    }

    /// Counts of standard errors by weight: `[#weight 0, #weight 1, …]`.
    pub fn weight_partition(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_physical + 1];
        for e in &self.standard_errors {
            counts[e.weight()] += 1;
        }
        while counts.len() > 1 && counts.last() == Some(&0) {
            counts.pop();
        }
        counts
    }

    /// True when every standard error is built from `I` and `X` only.
    pub fn is_bit_flip_only(&self) -> bool {
        self.standard_errors.iter().all(PauliString::is_bit_flip_only)
    }
}

/// The built-in codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuiltinCode {
    Repetition3,
    Perfect5,
    Steane7,
}

impl BuiltinCode {
    pub const ALL: [BuiltinCode; 3] = [Self::Repetition3, Self::Perfect5, Self::Steane7];

    pub fn name(self) -> &'static str {
        match self {
            Self::Repetition3 => "repetition3",
            Self::Perfect5 => "perfect5",
            Self::Steane7 => "steane7",
        }
    }

    pub fn spec(self) -> CodeSpec {
        match self {
            Self::Repetition3 => repetition3(),
            Self::Perfect5 => perfect5(),
            Self::Steane7 => steane7(),
        }
    }
}

impl FromStr for BuiltinCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::UnknownCode(s.to_string()))
    }
}

pub fn builtin_spec(name: &str) -> Result<CodeSpec> {
    Ok(name.parse::<BuiltinCode>()?.spec())
}

fn strings(list: &[&str]) -> Vec<PauliString> {
    list.iter().map(|s| s.parse().expect("static label")).collect()
}

/// Single-qubit errors in qubit-major order, `X, Z, W` per qubit.
fn all_single_qubit_errors(n_physical: usize) -> Vec<PauliString> {
    let mut out = Vec::with_capacity(3 * n_physical);
    for q in 0..n_physical {
        for l in [PauliLabel::X, PauliLabel::Z, PauliLabel::W] {
            out.push(PauliString::single(n_physical, q, l));
        }
    }
    out
}

fn repetition3() -> CodeSpec {
    CodeSpec {
        name: "repetition3".into(),
        n_physical: 3,
        logical_basis: [StateVector::from_bits(&[0, 0, 0]), StateVector::from_bits(&[1, 1, 1])],
        standard_errors: strings(&["III", "XII", "IXI", "IIX"]),
    }
}

/// Projects `seed` onto the joint +1 eigenspace of `generators` and normalizes.
fn stabilized(seed: StateVector, generators: &[PauliString]) -> StateVector {
    let mut v = seed.into_amplitudes();
    for g in generators {
        let gv = g.apply_to(&v).expect("generator spans the codeword");
        v = (&v + gv) * C64::new(0.5, 0.0);
    }
    let n = v.len().trailing_zeros() as usize;
    StateVector::unnormalized(v, vec![2; n]).expect("qubit factors").normalized()
}

fn perfect5() -> CodeSpec {
    let generators = strings(&["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"]);
    let zero = stabilized(StateVector::from_bits(&[0; 5]), &generators);
    let one = stabilized(StateVector::from_bits(&[1; 5]), &generators);
    let mut errors = vec![PauliString::identity(5)];
    errors.extend(all_single_qubit_errors(5));
    CodeSpec { name: "perfect5".into(), n_physical: 5, logical_basis: [zero, one], standard_errors: errors }
}

/// Rows of the [7,4,3] Hamming parity-check matrix, qubit 0 leftmost.
const HAMMING_CHECKS: [u8; 3] = [0b000_1111, 0b011_0011, 0b101_0101];

fn steane7() -> CodeSpec {
    let mut even = Vec::with_capacity(8);
    for mask in 0..8u8 {
        let word = (0..3).filter(|i| mask >> i & 1 == 1).fold(0u8, |acc, i| acc ^ HAMMING_CHECKS[i]);
        even.push(word as usize);
    }
    let amp = C64::new(1.0 / 8f64.sqrt(), 0.0);
    let build = |offset: usize| {
        let mut v = DVector::from_element(128, ZERO);
        for &w in &even {
            v[w ^ offset] = amp;
        }
        StateVector::unnormalized(v, vec![2; 7]).expect("qubit factors")
    };
    let mut errors = vec![PauliString::identity(7)];
    errors.extend(all_single_qubit_errors(7));
    for i in 0..7 {
        for j in 0..7 {
            if i != j {
                let mut labels = vec![PauliLabel::I; 7];
                labels[i] = PauliLabel::Z;
                labels[j] = PauliLabel::X;
                errors.push(PauliString::new(labels));
            }
        }
    }
    CodeSpec { name: "steane7".into(), n_physical: 7, logical_basis: [build(0), build(0b111_1111)], standard_errors: errors }
}

/// A validated code together with its physical basis and encoding matrix.
#[derive(Clone, Debug)]
pub struct QuantumCode {
    spec: CodeSpec,
    physical_basis: Vec<StateVector>,
    encoding: DenseOperator,
    decoding: DenseOperator,
}

impl QuantumCode {
    pub fn spec(&self) -> &CodeSpec {
        &self.spec
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn n_physical(&self) -> usize {
        self.spec.n_physical
    }

    /// Ancilla qubits `n`.
    pub fn ancilla_qubits(&self) -> usize {
        self.spec.ancilla_qubits()
    }

    /// `2^n`.
    pub fn syndrome_count(&self) -> usize {
        1 << self.ancilla_qubits()
    }

    /// `2^{n+1}`.
    pub fn dim(&self) -> usize {
        1 << self.n_physical()
    }

    pub fn physical_factors(&self) -> Vec<usize> {
        vec![2; self.n_physical()]
    }

    /// All `|Z_a^{(z)}⟩`, indexed by `z · 2^n + a`.
    pub fn physical_basis(&self) -> &[StateVector] {
        &self.physical_basis
    }

    pub fn basis_vector(&self, z: usize, a: usize) -> &StateVector {
        &self.physical_basis[z * self.syndrome_count() + a]
    }

    /// `|z_0⟩`.
    pub fn codeword(&self, z: usize) -> &StateVector {
        self.basis_vector(z, 0)
    }

    pub fn encoding(&self) -> &DenseOperator {
        &self.encoding
    }

    pub fn decoding(&self) -> &DenseOperator {
        &self.decoding
    }

    /// `max |⟨Z_i, Z_j⟩ − δ_ij|` over the physical basis.
    pub fn gram_deviation(&self) -> f64 {
        gram_deviation(self.encoding.matrix())
    }

    /// SHA-256 over the row-major entries of `E`, each as little-endian
    /// `re` then `im` bytes.
    pub fn encoding_checksum(&self) -> String {
        let m = self.encoding.matrix();
        let mut hasher = Sha256::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                hasher.update(m[(i, j)].re.to_le_bytes());
                hasher.update(m[(i, j)].im.to_le_bytes());
            }
        }
        hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn gram_deviation(columns: &DMatrix<C64>) -> f64 {
    let gram = columns.adjoint() * columns;
    let mut worst: f64 = 0.0;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((gram[(i, j)] - target).norm());
        }
    }
    worst
}

/// Builds `E` column by column from `O_a|z_0⟩`; fails if those columns are not orthonormal.
pub fn build_code(spec: CodeSpec) -> Result<QuantumCode> {
    spec.validate()?;
    let dim = 1usize << spec.n_physical;
    let factors = vec![2; spec.n_physical];
    let mut physical_basis = Vec::with_capacity(dim);
    for z in 0..2 {
        let base = spec.logical_basis[z].amplitudes();
        for err in &spec.standard_errors {
            let v = err.apply_to(base)?;
            physical_basis.push(StateVector::unnormalized(v, factors.clone())?);
        }
    }
    let columns = DMatrix::from_fn(dim, dim, |i, j| physical_basis[j].amplitude(i));
    let deviation = gram_deviation(&columns);
    if deviation > NORM_TOL {
        return Err(Error::NonOrthonormalBasis { deviation });
    }
    let encoding = DenseOperator::new(columns, factors)?;
    let decoding = encoding.adjoint();
    Ok(QuantumCode { spec, physical_basis, encoding, decoding })
}

pub fn build_builtin(code: BuiltinCode) -> QuantumCode {
    build_code(code.spec()).expect("built-in codes are valid")
}

/// `E(ψ ⊗ |a=0⟩) = α|0_0⟩ + β|1_0⟩`.
pub fn encode(code: &QuantumCode, logical: &StateVector) -> Result<StateVector> {
    if logical.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: logical.dim() });
    }
    let v = code.codeword(0).amplitudes() * logical.amplitude(0) + code.codeword(1).amplitudes() * logical.amplitude(1);
    StateVector::unnormalized(v, code.physical_factors())
}

/// Applies `E†` to the leading codeword qubits and the identity to any
/// trailing factors. The result is laid out as (logical qubit, `n` ancilla
/// qubits, trailing factors…).
pub fn decode(code: &QuantumCode, physical: &StateVector) -> Result<StateVector> {
    let out = apply_leading(code.decoding(), physical)?;
    relabel_codeword_block(code, out)
}

/// `E` on the leading logical+ancilla block, inverse of [`decode`].
pub fn encode_block(code: &QuantumCode, logical_repr: &StateVector) -> Result<StateVector> {
    let out = apply_leading(code.encoding(), logical_repr)?;
    relabel_codeword_block(code, out)
}

fn relabel_codeword_block(code: &QuantumCode, state: StateVector) -> Result<StateVector> {
    let m = crate::hilbert::leading_span(state.factors(), code.dim())?;
    let mut factors = code.physical_factors();
    factors.extend_from_slice(&state.factors()[m..]);
    state.with_factors(factors)
}

/// `O_a` as a dense operator on the codeword qubits.
pub fn standard_error_operator(code: &QuantumCode, a: usize) -> Result<DenseOperator> {
    let err = code
        .spec
        .standard_errors
        .get(a)
        .ok_or(Error::IndexOutOfRange { index: a, limit: code.syndrome_count() })?;
    err.operator().with_factors(code.physical_factors())
}

/// A codeword split around one physical qubit:
/// `|z_0⟩ = X_{z0} ⊗ |0⟩_k + X_{z1} ⊗ |1⟩_k`.
#[derive(Clone, Debug)]
pub struct QubitFactorization {
    pub qubit: usize,
    n_physical: usize,
    /// `components[z][y] = X_{zy}` over the other qubits in their original order.
    pub components: [[StateVector; 2]; 2],
}

impl QubitFactorization {
    pub fn component(&self, z: usize, y: usize) -> &StateVector {
        &self.components[z][y]
    }

    /// Places `rest ⊗ |y⟩` back with the singled-out qubit at its own position.
    fn place(&self, rest: &StateVector, y: usize) -> Result<StateVector> {
        let joint = rest.tensor(&StateVector::from_bits(&[y as u8]));
        let n = self.n_physical;
        let order: Vec<usize> = (0..n)
            .map(|i| match i.cmp(&self.qubit) {
                std::cmp::Ordering::Less => i,
                std::cmp::Ordering::Equal => n - 1,
                std::cmp::Ordering::Greater => i - 1,
            })
            .collect();
        joint.permute_factors(&order)
    }

    fn combine(&self, terms: [(usize, usize, f64); 2]) -> Result<StateVector> {
        let mut acc: Option<StateVector> = None;
        for (x, y, sign) in terms {
            let v = self.place(&self.components_for(x), y)?.scaled(C64::new(sign, 0.0));
            acc = Some(match acc {
                Some(a) => a.add(&v)?,
                None => v,
            });
        }
        Ok(acc.expect("two terms"))
    }

    fn components_for(&self, packed: usize) -> StateVector {
        self.components[packed >> 1][packed & 1].clone()
    }

    /// `X_{z0} ⊗ |0⟩ + X_{z1} ⊗ |1⟩`.
    pub fn reassemble(&self, z: usize) -> Result<StateVector> {
        self.combine([(2 * z, 0, 1.0), (2 * z + 1, 1, 1.0)])
    }

    /// The four branch vectors for logical value `z`: correct, phase error,
    /// bit error, and combined error, built from the components by sign and
    /// swap patterns.
    pub fn branch_vectors(&self, z: usize) -> Result<[StateVector; 4]> {
        let (a, b) = (2 * z, 2 * z + 1);
        Ok([
            self.combine([(a, 0, 1.0), (b, 1, 1.0)])?,
            self.combine([(a, 0, 1.0), (b, 1, -1.0)])?,
            self.combine([(a, 1, 1.0), (b, 0, 1.0)])?,
            self.combine([(a, 1, 1.0), (b, 0, -1.0)])?,
        ])
    }
}

/// Splits both codewords around physical qubit `k`.
pub fn single_out(code: &QuantumCode, k: usize) -> Result<QubitFactorization> {
    let n = code.n_physical();
    if k >= n {
        return Err(Error::IndexOutOfRange { index: k, limit: n });
    }
    let rest_dim = 1usize << (n - 1);
    let shift = n - 1 - k;
    let low_mask = (1usize << shift) - 1;
    let split = |z: usize, y: usize| {
        let word = code.codeword(z).amplitudes();
        let v = DVector::from_fn(rest_dim, |r, _| {
            let full = ((r & !low_mask) << 1) | (y << shift) | (r & low_mask);
            word[full]
        });
        StateVector::unnormalized(v, vec![2; n - 1]).expect("qubit factors")
    };
    Ok(QubitFactorization {
        qubit: k,
        n_physical: n,
        components: [[split(0, 0), split(0, 1)], [split(1, 0), split(1, 1)]],
    })
}

/// One of the ten inner products `⟨X_{zy}, X_{z'y'}⟩`.
#[derive(Clone, Debug)]
pub struct ComponentProduct {
    pub left: (usize, usize),
    pub right: (usize, usize),
    pub value: C64,
    pub expected: f64,
    pub deviation: f64,
    pub pass: bool,
}

/// Whether a code can absorb an arbitrary error on one physical qubit.
#[derive(Clone, Debug)]
pub struct QubitProductReport {
    pub qubit: usize,
    /// Four diagonal norms then the six unordered cross pairs.
    pub products: Vec<ComponentProduct>,
    /// `max |⟨Z_i, Z_j⟩ − δ_ij|` over the eight branch vectors of both codewords.
    pub branch_gram_deviation: f64,
    pub branch_vectors_orthonormal: bool,
    pub passed: bool,
}

impl QubitProductReport {
    pub fn max_deviation(&self) -> f64 {
        self.products.iter().map(|p| p.deviation).fold(0.0, f64::max)
    }
}

/// Checks `⟨X_{zy}, X_{z'y'}⟩ = ½ δ_{zz'} δ_{yy'}` for qubit `k`, plus
/// orthonormality of the eight branch vectors.
pub fn verify_qubit_products(code: &QuantumCode, k: usize) -> Result<QubitProductReport> {
    let fac = single_out(code, k)?;
    let labels = [(0, 0), (0, 1), (1, 0), (1, 1)];
    let mut pairs: Vec<(usize, usize)> = (0..4).map(|i| (i, i)).collect();
    for i in 0..4 {
        for j in i + 1..4 {
            pairs.push((i, j));
        }
    }
    let mut products = Vec::with_capacity(10);
    for (i, j) in pairs {
        let (l, r) = (labels[i], labels[j]);
        let value = fac.component(l.0, l.1).inner(fac.component(r.0, r.1))?;
        let expected = if i == j { 0.5 } else { 0.0 };
        let deviation = (value - C64::new(expected, 0.0)).norm();
        products.push(ComponentProduct { left: l, right: r, value, expected, deviation, pass: deviation <= NORM_TOL });
    }

    let mut vectors = Vec::with_capacity(8);
    for z in 0..2 {
        vectors.extend(fac.branch_vectors(z)?);
    }
    let columns = DMatrix::from_fn(code.dim(), 8, |i, j| vectors[j].amplitude(i));
    let branch_gram_deviation = gram_deviation(&columns);
    let passed = products.iter().all(|p| p.pass);
    Ok(QubitProductReport {
        qubit: k,
        products,
        branch_gram_deviation,
        branch_vectors_orthonormal: branch_gram_deviation <= NORM_TOL,
        passed,
    })
}
