//! Corruptions of encoded states: standard errors, coherent superpositions of
//! them, probabilistic mixtures, and one physical qubit unitarily entangled
//! with an environment.

use serde::{Deserialize, Serialize};

use crate::codes::{decode, single_out, PauliLabel, PauliString, QuantumCode};
use crate::error::{Error, Result};
use crate::hilbert::{
    apply_leading, apply_local, haar_unitary, leading_span, random_state, seeded_rng, DenseOperator,
    DensityMatrix, StateVector, C64, NORM_TOL, ONE, UNITARY_TOL, ZERO,
};

pub const DEFAULT_ENV_DIM: usize = 2;
pub const MAX_ENV_DIM: usize = 8;

/// Unknown environment state `η` and the unitary `V` it undergoes together
/// with one physical qubit. `V` acts on (qubit ⊗ environment).
#[derive(Clone, Debug, PartialEq)]
pub struct EnvironmentModel {
    eta: StateVector,
    interaction: DenseOperator,
}

impl EnvironmentModel {
    pub fn new(eta: StateVector, interaction: DenseOperator) -> Result<Self> {
        let d = eta.dim();
        if d == 0 || d > MAX_ENV_DIM {
            return Err(Error::IndexOutOfRange { index: d, limit: MAX_ENV_DIM + 1 });
        }
        if !eta.is_normalized() {
            return Err(Error::NotNormalized { what: "environment state", norm_sqr: eta.norm_sqr() });
        }
        if interaction.dim() != 2 * d {
            return Err(Error::DimensionMismatch { expected: 2 * d, found: interaction.dim() });
        }
        let deviation = interaction.unitarity_defect();
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary { what: "environment interaction", deviation });
        }
        Ok(Self { eta: eta.with_factors(vec![d])?, interaction: interaction.with_factors(vec![2, d])? })
    }

    /// Haar-random `V` and random `η`, both drawn from `seed`.
    pub fn random(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 || dim > MAX_ENV_DIM {
            return Err(Error::IndexOutOfRange { index: dim, limit: MAX_ENV_DIM + 1 });
        }
        let mut rng = seeded_rng(seed);
        let interaction = haar_unitary(2 * dim, &mut rng);
        let eta = random_state(&[dim], &mut rng);
        Self::new(eta, interaction)
    }

    /// `V = qubit_op ⊗ 1` with `η = |0⟩`: a local unitary that leaves the environment alone.
    pub fn local(qubit_op: &DenseOperator, dim: usize) -> Result<Self> {
        if qubit_op.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: qubit_op.dim() });
        }
        let eta = StateVector::basis(&[dim], 0)?;
        Self::new(eta, qubit_op.kron(&DenseOperator::identity(&[dim])))
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::local(&DenseOperator::identity(&[2]), dim)
    }

    pub fn dim(&self) -> usize {
        self.eta.dim()
    }

    pub fn eta(&self) -> &StateVector {
        &self.eta
    }

    pub fn interaction(&self) -> &DenseOperator {
        &self.interaction
    }
}

/// `V(|0⟩⊗η) = |0⟩⊗μ + |1⟩⊗ν`, `V(|1⟩⊗η) = |0⟩⊗σ + |1⟩⊗τ`, and the four
/// environment weights attached to the correct, phase, bit, and combined branches.
#[derive(Clone, Debug)]
pub struct BranchDecomposition {
    pub mu: StateVector,
    pub nu: StateVector,
    pub sigma: StateVector,
    pub tau: StateVector,
    /// `(μ+τ)/2, (μ−τ)/2, (ν+σ)/2, (ν−σ)/2`.
    pub branch_weights: [StateVector; 4],
}

impl BranchDecomposition {
    /// Deviations of `‖μ‖²+‖ν‖² = 1`, `‖σ‖²+‖τ‖² = 1`, `⟨μ,σ⟩+⟨ν,τ⟩ = 0`.
    pub fn unitarity_defects(&self) -> [f64; 3] {
        let inner = |a: &StateVector, b: &StateVector| a.inner(b).expect("same environment");
        [
            (self.mu.norm_sqr() + self.nu.norm_sqr() - 1.0).abs(),
            (self.sigma.norm_sqr() + self.tau.norm_sqr() - 1.0).abs(),
            (inner(&self.mu, &self.sigma) + inner(&self.nu, &self.tau)).norm(),
        ]
    }

    /// `Σ ‖branch weight‖²`, which equals 1 when paired with unit branch vectors.
    pub fn total_weight(&self) -> f64 {
        self.branch_weights.iter().map(StateVector::norm_sqr).sum()
    }
}

pub fn branch_decompose(model: &EnvironmentModel) -> BranchDecomposition {
    let d = model.dim();
    let evolve = |bit: u8| {
        let input = StateVector::from_bits(&[bit]).tensor(model.eta());
        model.interaction().matrix() * input.amplitudes()
    };
    let slice = |v: &nalgebra::DVector<C64>, half: usize| {
        StateVector::unnormalized(v.rows(half * d, d).into_owned(), vec![d]).expect("environment factor")
    };
    let from0 = evolve(0);
    let from1 = evolve(1);
    let (mu, nu) = (slice(&from0, 0), slice(&from0, 1));
    let (sigma, tau) = (slice(&from1, 0), slice(&from1, 1));
    let half = C64::new(0.5, 0.0);
    let combo = |a: &StateVector, b: &StateVector, sign: f64| {
        a.add(&b.scaled(C64::new(sign, 0.0))).expect("same environment").scaled(half)
    };
    let branch_weights = [combo(&mu, &tau, 1.0), combo(&mu, &tau, -1.0), combo(&nu, &sigma, 1.0), combo(&nu, &sigma, -1.0)];
    BranchDecomposition { mu, nu, sigma, tau, branch_weights }
}

/// Branch vectors of codeword `|z_0⟩` around qubit `k`.
#[derive(Clone, Debug)]
pub struct ZVectors {
    pub correct: StateVector,
    pub phase: StateVector,
    pub bit: StateVector,
    pub both: StateVector,
    /// False when the code does not separate the branches at this qubit.
    pub orthonormal: bool,
}

impl ZVectors {
    pub fn as_array(&self) -> [&StateVector; 4] {
        [&self.correct, &self.phase, &self.bit, &self.both]
    }
}

pub fn z_vectors(code: &QuantumCode, z: usize, k: usize) -> Result<ZVectors> {
    if z > 1 {
        return Err(Error::IndexOutOfRange { index: z, limit: 2 });
    }
    let [correct, phase, bit, both] = single_out(code, k)?.branch_vectors(z)?;
    let v = [&correct, &phase, &bit, &both];
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((v[i].inner(v[j])? - target).norm());
        }
    }
    Ok(ZVectors { correct, phase, bit, both, orthonormal: worst <= NORM_TOL })
}

fn check_coefficients(code: &QuantumCode, c: &[C64]) -> Result<()> {
    if c.len() != code.syndrome_count() {
        return Err(Error::DimensionMismatch { expected: code.syndrome_count(), found: c.len() });
    }
    let norm_sqr: f64 = c.iter().map(|x| x.norm_sqr()).sum();
    if (norm_sqr - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { what: "error coefficients", norm_sqr });
    }
    Ok(())
}

/// Weight of `psi` outside the span of the error-free codewords (over the leading codeword qubits).
pub fn weight_outside_code_space(code: &QuantumCode, psi: &StateVector) -> Result<f64> {
    let decoded = decode(code, psi)?;
    let m = leading_span(decoded.factors(), code.dim())?;
    let rest: usize = decoded.factors()[m..].iter().product();
    let syndromes = code.syndrome_count();
    let mut outside = 0.0;
    for (i, amp) in decoded.amplitudes().iter().enumerate() {
        if (i / rest) % syndromes != 0 {
            outside += amp.norm_sqr();
        }
    }
    Ok(outside)
}

/// `Σ_a c_a O_a` on the codeword qubits.
pub fn coherent_operator(code: &QuantumCode, c: &[C64]) -> Result<DenseOperator> {
    check_coefficients(code, c)?;
    let mut acc = DenseOperator::zeros(&code.physical_factors());
    for (err, &ca) in code.spec().standard_errors.iter().zip(c) {
        if ca != ZERO {
            acc = acc.add(&err.operator().scaled(ca))?;
        }
    }
    acc.with_factors(code.physical_factors())
}

/// `α|0_0⟩ + β|1_0⟩ ↦ Σ_a c_a (α|0_a⟩ + β|1_a⟩)`. Trailing factors of `psi`
/// (other logical qubits, environments) are left untouched.
pub fn apply_coherent(code: &QuantumCode, psi: &StateVector, c: &[C64]) -> Result<StateVector> {
    let op = coherent_operator(code, c)?;
    let outside = weight_outside_code_space(code, psi)?;
    if outside > NORM_TOL {
        return Err(Error::NotInCodeSpace { outside });
    }
    apply_leading(&op, psi)
}

/// One term `p_j, c_j` of a mixture of coherent errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureTerm {
    pub probability: f64,
    pub coefficients: Vec<C64>,
}

fn check_mixture(code: &QuantumCode, terms: &[MixtureTerm]) -> Result<()> {
    if terms.is_empty() {
        return Err(Error::InvalidProbabilities("empty mixture".into()));
    }
    if let Some(t) = terms.iter().find(|t| !(t.probability > 0.0)) {
        return Err(Error::InvalidProbabilities(format!("probability {} is not positive", t.probability)));
    }
    let total: f64 = terms.iter().map(|t| t.probability).sum();
    if (total - 1.0).abs() > NORM_TOL {
        return Err(Error::InvalidProbabilities(format!("probabilities sum to {total}")));
    }
    for t in terms {
        check_coefficients(code, &t.coefficients)?;
    }
    Ok(())
}

/// `ρ = Σ_j p_j U_j|ψ⟩⟨ψ|U_j†` with `U_j = Σ_a c_{ja} O_a`.
pub fn apply_mixture(code: &QuantumCode, psi: &StateVector, terms: &[MixtureTerm]) -> Result<DensityMatrix> {
    check_mixture(code, terms)?;
    let branches = terms
        .iter()
        .map(|t| Ok((t.probability, apply_coherent(code, psi, &t.coefficients)?)))
        .collect::<Result<Vec<_>>>()?;
    DensityMatrix::mixture(&branches)
}

/// Appends `η` as the last factor and lets `V` act on (qubit `k`, environment).
pub fn entangle_environment(
    code: &QuantumCode,
    psi: &StateVector,
    k: usize,
    model: &EnvironmentModel,
) -> Result<StateVector> {
    if k >= code.n_physical() {
        return Err(Error::IndexOutOfRange { index: k, limit: code.n_physical() });
    }
    leading_span(psi.factors(), code.dim())?;
    let joint = psi.tensor(model.eta());
    let env = joint.factors().len() - 1;
    apply_local(model.interaction(), &[k, env], &joint)
}

/// Rebuilds the environment-entangled state as
/// `Σ_branch (O_branch ψ) ⊗ w_branch` with `O ∈ {1, Z_k, X_k, (XZ)_k}`.
pub fn branch_reconstruction(
    code: &QuantumCode,
    psi: &StateVector,
    k: usize,
    branches: &BranchDecomposition,
) -> Result<StateVector> {
    if k >= code.n_physical() {
        return Err(Error::IndexOutOfRange { index: k, limit: code.n_physical() });
    }
    let labels = [PauliLabel::I, PauliLabel::Z, PauliLabel::X, PauliLabel::W];
    let mut acc: Option<StateVector> = None;
    for (label, weight) in labels.iter().zip(&branches.branch_weights) {
        let op = PauliString::single(1, 0, *label).operator();
        let term = apply_local(&op, &[k], psi)?.tensor(weight);
        acc = Some(match acc {
            Some(a) => a.add(&term)?,
            None => term,
        });
    }
    Ok(acc.expect("four branches"))
}

/// How the environment of an [`ErrorEvent::Environment`] is specified.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum EnvironmentSpec {
    Seeded { dim: usize, seed: u64 },
    Identity { dim: usize },
    Explicit { eta: Vec<C64>, interaction: Vec<Vec<C64>> },
}

impl EnvironmentSpec {
    pub fn model(&self) -> Result<EnvironmentModel> {
        match self {
            Self::Seeded { dim, seed } => EnvironmentModel::random(*dim, *seed),
            Self::Identity { dim } => EnvironmentModel::identity(*dim),
            Self::Explicit { eta, interaction } => {
                let d = eta.len();
                let eta = StateVector::from_vec(eta.clone(), vec![d])?;
                let n = interaction.len();
                if interaction.iter().any(|row| row.len() != n) {
                    return Err(Error::Parse { field: "interaction".into(), message: "matrix is not square".into() });
                }
                let m = nalgebra::DMatrix::from_fn(n, n, |i, j| interaction[i][j]);
                EnvironmentModel::new(eta, DenseOperator::new(m, vec![n])?)
            }
        }
    }
}

/// One corruption event.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ErrorEvent {
    Standard { syndrome: usize },
    Coherent { coefficients: Vec<C64> },
    Mixture { terms: Vec<MixtureTerm> },
    Environment { qubit: usize, model: EnvironmentSpec },
}

/// Result of applying an [`ErrorEvent`].
#[derive(Clone, Debug)]
pub enum Corrupted {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

impl ErrorEvent {
    pub fn validate(&self, code: &QuantumCode) -> Result<()> {
        match self {
            Self::Standard { syndrome } => {
                if *syndrome >= code.syndrome_count() {
                    return Err(Error::IndexOutOfRange { index: *syndrome, limit: code.syndrome_count() });
                }
            }
            Self::Coherent { coefficients } => check_coefficients(code, coefficients)?,
            Self::Mixture { terms } => check_mixture(code, terms)?,
            Self::Environment { qubit, model } => {
                if *qubit >= code.n_physical() {
                    return Err(Error::IndexOutOfRange { index: *qubit, limit: code.n_physical() });
                }
                model.model()?;
            }
        }
        Ok(())
    }

    /// Corrupts `psi` (codeword qubits first). Environment events append the
    /// environment as the last factor.
    pub fn apply(&self, code: &QuantumCode, psi: &StateVector) -> Result<Corrupted> {
        self.validate(code)?;
        Ok(match self {
            Self::Standard { syndrome } => {
                let mut c = vec![ZERO; code.syndrome_count()];
                c[*syndrome] = ONE;
                Corrupted::Pure(apply_coherent(code, psi, &c)?)
            }
            Self::Coherent { coefficients } => Corrupted::Pure(apply_coherent(code, psi, coefficients)?),
            Self::Mixture { terms } => Corrupted::Mixed(apply_mixture(code, psi, terms)?),
            Self::Environment { qubit, model } => {
                Corrupted::Pure(entangle_environment(code, psi, *qubit, &model.model()?)?)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{build_builtin, encode, BuiltinCode};
    use crate::hilbert::{random_coefficients, random_state};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn basis_coeffs(len: usize, a: usize) -> Vec<C64> {
        let mut v = vec![ZERO; len];
        v[a] = ONE;
        v
    }

    #[test]
    fn coherent_identity_and_flip() {
        let rep = build_builtin(BuiltinCode::Repetition3);
        let psi = encode(&rep, &StateVector::qubit(c(0.6, 0.0), c(0.0, 0.8)).unwrap()).unwrap();
        let same = apply_coherent(&rep, &psi, &basis_coeffs(4, 0)).unwrap();
        assert!(same.max_abs_diff(&psi) < 1e-15);

        let flipped = apply_coherent(&rep, &StateVector::from_bits(&[0, 0, 0]), &[ZERO, ONE, ZERO, ZERO]).unwrap();
        assert_eq!(flipped, StateVector::from_bits(&[1, 0, 0]));
    }

    #[test]
    fn coherent_rejects_bad_input() {
        let rep = build_builtin(BuiltinCode::Repetition3);
        let psi = StateVector::from_bits(&[0, 0, 0]);
        assert!(matches!(
            apply_coherent(&rep, &psi, &[ONE, ONE, ZERO, ZERO]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(apply_coherent(&rep, &psi, &[ONE]), Err(Error::DimensionMismatch { .. })));
        let off = StateVector::from_bits(&[1, 0, 0]);
        assert!(matches!(apply_coherent(&rep, &off, &basis_coeffs(4, 0)), Err(Error::NotInCodeSpace { .. })));
    }

    #[test]
    fn mixture_validation() {
        let rep = build_builtin(BuiltinCode::Repetition3);
        let psi = StateVector::from_bits(&[0, 0, 0]);
        let t = |p: f64| MixtureTerm { probability: p, coefficients: basis_coeffs(4, 1) };
        assert!(matches!(apply_mixture(&rep, &psi, &[t(0.5)]), Err(Error::InvalidProbabilities(_))));
        assert!(matches!(apply_mixture(&rep, &psi, &[t(1.5), t(-0.5)]), Err(Error::InvalidProbabilities(_))));
        assert!(matches!(apply_mixture(&rep, &psi, &[]), Err(Error::InvalidProbabilities(_))));
        let rho = apply_mixture(&rep, &psi, &[t(1.0)]).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mixture_of_orthogonal_errors_has_two_half_eigenvalues() {
        let p5 = build_builtin(BuiltinCode::Perfect5);
        let psi = encode(&p5, &StateVector::qubit(c(0.6, 0.0), c(0.0, 0.8)).unwrap()).unwrap();
        let terms = [
            MixtureTerm { probability: 0.5, coefficients: basis_coeffs(16, 3) },
            MixtureTerm { probability: 0.5, coefficients: basis_coeffs(16, 7) },
        ];
        let rho = apply_mixture(&p5, &psi, &terms).unwrap();
        let ev = rho.eigenvalues();
        let n = ev.len();
        assert!((ev[n - 1] - 0.5).abs() < 1e-12 && (ev[n - 2] - 0.5).abs() < 1e-12);
        assert!(ev[..n - 2].iter().all(|e| e.abs() < 1e-12));
    }

    #[test]
    fn branch_decomposition_special_cases() {
        let id = branch_decompose(&EnvironmentModel::identity(2).unwrap());
        let eta = StateVector::basis(&[2], 0).unwrap();
        assert_eq!(id.mu, eta);
        assert_eq!(id.tau, eta);
        assert_eq!(id.nu.norm(), 0.0);
        assert_eq!(id.sigma.norm(), 0.0);
        assert_eq!(id.branch_weights[0], eta);
        assert!(id.branch_weights[1..].iter().all(|w| w.norm() == 0.0));

        let z = branch_decompose(&EnvironmentModel::local(&DenseOperator::pauli_z(), 2).unwrap());
        assert_eq!(z.mu, eta);
        assert_eq!(z.tau, eta.scaled(-ONE));
        assert_eq!(z.branch_weights[1], eta);
        assert!([0, 2, 3].iter().all(|&i| z.branch_weights[i].norm() == 0.0));

        let x = branch_decompose(&EnvironmentModel::local(&DenseOperator::pauli_x(), 2).unwrap());
        assert_eq!(x.mu.norm(), 0.0);
        assert_eq!(x.tau.norm(), 0.0);
        assert_eq!(x.nu, eta);
        assert_eq!(x.sigma, eta);
        assert_eq!(x.branch_weights[2], eta);
    }

    #[test]
    fn entangle_with_trivial_interactions() {
        let p5 = build_builtin(BuiltinCode::Perfect5);
        let psi = encode(&p5, &StateVector::qubit(c(0.6, 0.0), c(0.0, 0.8)).unwrap()).unwrap();
        let model = EnvironmentModel::identity(3).unwrap();
        let out = entangle_environment(&p5, &psi, 1, &model).unwrap();
        assert!(out.max_abs_diff(&psi.tensor(model.eta())) < 1e-15);
        assert_eq!(out.factors().len(), 6);
        assert!(matches!(entangle_environment(&p5, &psi, 5, &model), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn random_environment_reconstruction() {
        let p5 = build_builtin(BuiltinCode::Perfect5);
        let mut rng = seeded_rng(1);
        let psi = encode(&p5, &random_state(&[2], &mut rng)).unwrap();
        let model = EnvironmentModel::random(2, 5).unwrap();
        let out = entangle_environment(&p5, &psi, 2, &model).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-12);

        let model = EnvironmentModel::random(4, 9).unwrap();
        let out = entangle_environment(&p5, &psi, 2, &model).unwrap();
        let b = branch_decompose(&model);
        assert!(b.unitarity_defects().iter().all(|&d| d < NORM_TOL));
        assert!((b.total_weight() - 1.0).abs() < NORM_TOL);
        let rebuilt = branch_reconstruction(&p5, &psi, 2, &b).unwrap();
        assert!(out.max_abs_diff(&rebuilt) < 1e-10);
    }

    #[test]
    fn environment_model_validation() {
        assert!(EnvironmentModel::random(0, 1).is_err());
        assert!(EnvironmentModel::random(MAX_ENV_DIM + 1, 1).is_err());
        let eta = StateVector::basis(&[2], 0).unwrap();
        let bad = DenseOperator::identity(&[4]).scaled(c(2.0, 0.0));
        assert!(matches!(EnvironmentModel::new(eta, bad), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn z_vectors_examples() {
        let rep = build_builtin(BuiltinCode::Repetition3);
        let zv = z_vectors(&rep, 0, 0).unwrap();
        assert_eq!(zv.bit, StateVector::from_bits(&[1, 0, 0]));
        assert!(!zv.orthonormal);

        let st = build_builtin(BuiltinCode::Steane7);
        let zv = z_vectors(&st, 1, 3).unwrap();
        assert!((zv.both.norm() - 1.0).abs() < 1e-10);
        assert!(zv.orthonormal);
    }

    #[test]
    fn event_serde_shape() {
        let ev = ErrorEvent::Environment { qubit: 2, model: EnvironmentSpec::Seeded { dim: 2, seed: 9 } };
        let text = toml::to_string(&ev).unwrap();
        let back: ErrorEvent = toml::from_str(&text).unwrap();
        assert_eq!(back, ev);

        let rep = build_builtin(BuiltinCode::Repetition3);
        let mut rng = seeded_rng(2);
        let coeffs = random_coefficients(4, &mut rng);
        let ev = ErrorEvent::Coherent { coefficients: coeffs };
        assert!(ev.validate(&rep).is_ok());
        assert!(ErrorEvent::Standard { syndrome: 4 }.validate(&rep).is_err());
    }
}
