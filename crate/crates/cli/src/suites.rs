use std::path::Path;

use anyhow::Context;
use codeword::codes::{build_code, verify_qubit_products, QuantumCode};
use codeword::constraints::{
    commutator_closure, constraint_basis, constraint_operator, gauge_lift, legal_lift, little_group_element_with,
    multi_codeword_constraint, representation_matrix, scalar_product_check, sector_mixing, ConstraintSet, BASIS_TOL,
    LEGAL_TOL,
};
use codeword::errors::Corrupted;
use codeword::hilbert::{
    apply, apply_local, haar_unitary, mix_seed, partial_trace, random_coefficients, random_hermitian, random_state,
    seeded_rng, DensityMatrix, SimRng, StateVector, C64, NORM_TOL, PRODUCT_TOL, UNITARY_TOL,
};
use codeword::recovery::{
    build_syndrome_transfer, decoded_logical_density, fidelity, recover_by_decoding, recover_in_place, recover_mixture,
    LogicalState, SyndromeTransferUnitary,
};
use codeword::spec_file::{parse_spec, render_spec};
use codeword::Error;
use rayon::prelude::*;

use crate::config::{Command, ExperimentConfig};
use crate::event::ErrorSpec;
use crate::report::{Check, CodeSummary, Report};

/// `1 − F` allowed for a recovered logical state.
pub const RECOVERY_TOL: f64 = 1e-10;
/// Unitarity of the syndrome-transfer operator and scalar-product preservation.
pub const EXACT_TOL: f64 = 1e-12;

pub fn code_summary(code: &QuantumCode) -> CodeSummary {
    CodeSummary {
        name: code.name().to_string(),
        n_physical: code.n_physical(),
        ancilla_qubits: code.ancilla_qubits(),
        encoding_checksum: code.encoding_checksum(),
    }
}

/// Seed of trial `t`.
pub fn trial_seed(config: &ExperimentConfig, t: usize) -> u64 {
    mix_seed(config.seed, t as u64)
}

/// `(|0⟩ + i|1⟩)/√2`.
pub fn plus_i() -> StateVector {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    StateVector::qubit(C64::new(h, 0.0), C64::new(0.0, h)).expect("normalized")
}

pub fn run(config: &ExperimentConfig) -> anyhow::Result<Report> {
    config.validate()?;
    match config.command {
        Command::Verify => cmd_verify(config),
        Command::Recover => cmd_recover(config),
        Command::Constraints => cmd_constraints(config),
        Command::ExportSpec => cmd_export_spec(config).map(|(_, r)| r),
    }
}

// ---------------------------------------------------------------- verify

pub fn verify_checks(code: &QuantumCode) -> Vec<Check> {
    let n = code.ancilla_qubits();
    let spec = code.spec();
    let mut checks = vec![
        Check::bounded("encoding-orthonormality", "<Z_a^(z), Z_b^(z')> = delta", code.gram_deviation(), NORM_TOL),
        Check::bounded("encoding-unitarity", "E^dagger E = 1", code.encoding().unitarity_defect(), UNITARY_TOL),
    ];
    let partition = spec.weight_partition();
    let sum: Vec<String> = partition.iter().map(ToString::to_string).collect();
    checks.push(
        Check::count("standard-error-count", "number of standard errors = 2^n", 1 << n, spec.standard_errors.len())
            .with_detail(format!("by weight {} = {}", sum.join(" + "), spec.standard_errors.len())),
    );
    checks.push(Check::count(
        "basis-count",
        "2 * 2^n error basis vectors = 2^(n+1)",
        1 << code.n_physical(),
        code.physical_basis().len(),
    ));
    checks.push(Check::count(
        "constraint-count",
        "constraint vectors = 2(2^n - 1)",
        2 * ((1 << n) - 1),
        constraint_basis(code).count(),
    ));
    let bit_only = spec.is_bit_flip_only();
    for k in 0..code.n_physical() {
        let name = format!("qubit-products[{k}]");
        let relation = "<X_zy, X_z'y'> = 1/2 delta_zz' delta_yy' (10 products)";
        let check = match verify_qubit_products(code, k) {
            Ok(r) => {
                let residual = r.max_deviation().max(r.branch_gram_deviation);
                let failing = r.products.iter().filter(|p| !p.pass).count();
                let c = Check::bounded(&name, relation, residual, NORM_TOL).with_detail(format!(
                    "{} of {} products off; branch vectors orthonormal: {}",
                    failing,
                    r.products.len(),
                    r.branch_vectors_orthonormal
                ));
                if bit_only {
                    c.expect_failure()
                } else {
                    c
                }
            }
            Err(e) => Check::failed(&name, relation, e.to_string()),
        };
        checks.push(check);
    }
    checks
}

pub fn cmd_verify(config: &ExperimentConfig) -> anyhow::Result<Report> {
    let code = config.code.load()?;
    Ok(Report::new(config, code_summary(&code), verify_checks(&code)))
}

// ---------------------------------------------------------------- recover

#[derive(Clone, Debug, Default)]
struct TrialOutcome {
    decoding_fidelity: f64,
    second_schmidt: Option<f64>,
    in_place_fidelity: Option<f64>,
    agreement: Option<f64>,
    clean_syndrome_weight: f64,
    failure: Option<String>,
}

fn logical_density(state: &LogicalState) -> DensityMatrix {
    match state {
        LogicalState::Pure(p) => DensityMatrix::from_pure(p),
        LogicalState::Mixed(m) => m.clone(),
    }
}

fn recover_trial(
    code: &QuantumCode,
    spec: &ErrorSpec,
    transfer: &SyndromeTransferUnitary,
    config: &ExperimentConfig,
    t: usize,
) -> anyhow::Result<TrialOutcome> {
    let seed = trial_seed(config, t);
    let psi = if t == 0 { plus_i() } else { random_state(&[2], &mut seeded_rng(mix_seed(seed, 0))) };
    let encoded = codeword::codes::encode(code, &psi)?;
    let event = spec.event_for_trial(code, config.env_dim, seed, t)?;
    let mut out = TrialOutcome::default();
    match event.apply(code, &encoded)? {
        Corrupted::Pure(state) => {
            let decoded = match recover_by_decoding(code, &state, &psi) {
                Ok(r) => {
                    out.decoding_fidelity = r.fidelity;
                    out.second_schmidt = r.factored.as_ref().map(|f| f.second_schmidt());
                    out.clean_syndrome_weight = r.junk.syndrome_weights[0];
                    Some(r)
                }
                Err(Error::NotCorrigible { measure }) => {
                    out.decoding_fidelity = fidelity(&decoded_logical_density(code, &state)?, &psi)?;
                    out.second_schmidt = Some(measure);
                    out.failure = Some(format!("trial {t}: logical qubit entangled after decoding"));
                    None
                }
                Err(e) => return Err(e.into()),
            };
            match recover_in_place(code, &state, transfer, &psi) {
                Ok(r) => {
                    out.in_place_fidelity = Some(r.fidelity);
                    if let Some(d) = &decoded {
                        out.agreement = Some(fidelity(&logical_density(&d.logical), &logical_density(&r.logical))?);
                    }
                }
                Err(Error::NotCorrigible { .. }) => {
                    out.in_place_fidelity = Some(0.0);
                    out.agreement = Some(0.0);
                }
                Err(e) => return Err(e.into()),
            }
        }
        Corrupted::Mixed(rho) => match recover_mixture(code, &rho, &psi) {
            Ok(r) => {
                out.decoding_fidelity = r.fidelity;
                out.clean_syndrome_weight = r.junk.syndrome_weights[0];
            }
            Err(Error::NotCorrigible { .. }) => {
                let decoded = rho.conjugate_by(code.decoding())?;
                let decoded = DensityMatrix::new(decoded.matrix().clone(), code.physical_factors())?;
                out.decoding_fidelity = fidelity(&partial_trace(&decoded, &[0])?, &psi)?;
                out.failure = Some(format!("trial {t}: recovered logical state is mixed"));
            }
            Err(e) => return Err(e.into()),
        },
    }
    Ok(out)
}

fn min_of(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(f64::INFINITY, f64::min)
}

fn max_of(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, f64::max)
}

pub fn recover_checks(code: &QuantumCode, config: &ExperimentConfig) -> anyhow::Result<Vec<Check>> {
    let default_spec = ErrorSpec::Environment { qubit: None, dim: None, seed: None, identity: false };
    let spec = config.error.as_ref().unwrap_or(&default_spec);
    let transfer = build_syndrome_transfer(code)?;
    let outcomes = (0..config.trials)
        .into_par_iter()
        .map(|t| recover_trial(code, spec, &transfer, config, t))
        .collect::<anyhow::Result<Vec<_>>>()?;

    let mut checks = Vec::new();
    checks.push(match transfer.dense() {
        Some(t) => Check::bounded("transfer-unitarity", "T^dagger T = 1", t.unitarity_defect(), EXACT_TOL)
            .with_detail(format!("dense, order {}", transfer.order())),
        None => Check::bounded(
            "transfer-specified-columns",
            "T (Z_a^(z) x |0>) = Z_0^(z) x |a>",
            transfer.specified_column_defect(code)?,
            EXACT_TOL,
        )
        .with_detail(format!("applied lazily, order {}", transfer.order())),
    });

    let fids: Vec<f64> = outcomes.iter().map(|o| o.decoding_fidelity).collect();
    let failures: Vec<&String> = outcomes.iter().filter_map(|o| o.failure.as_ref()).collect();
    let mut decoding = Check::bounded(
        "decoding-recovery",
        "E^dagger psi_corrupted = psi x junk",
        1.0 - min_of(fids.iter().copied()),
        RECOVERY_TOL,
    )
    .with_fidelity(&fids);
    if let Some(first) = failures.first() {
        decoding = decoding.with_detail(format!("{} failing trials; first: {first}", failures.len()));
    }
    checks.push(decoding);

    let schmidt: Vec<f64> = outcomes.iter().filter_map(|o| o.second_schmidt).collect();
    if !schmidt.is_empty() {
        checks.push(Check::bounded(
            "logical-cut-product",
            "second Schmidt value across logical | rest = 0",
            max_of(schmidt.iter().copied()),
            PRODUCT_TOL,
        ));
    }
    let in_place: Vec<f64> = outcomes.iter().filter_map(|o| o.in_place_fidelity).collect();
    if !in_place.is_empty() {
        checks.push(
            Check::bounded(
                "in-place-recovery",
                "T restores the codeword, syndrome moves to the fresh ancilla",
                1.0 - min_of(in_place.iter().copied()),
                RECOVERY_TOL,
            )
            .with_fidelity(&in_place),
        );
    }
    let agreement: Vec<f64> = outcomes.iter().filter_map(|o| o.agreement).collect();
    if !agreement.is_empty() {
        checks.push(Check::bounded(
            "method-agreement",
            "decoding and in-place recovery give the same logical state",
            1.0 - min_of(agreement.iter().copied()),
            RECOVERY_TOL,
        ));
    }
    checks.push(Check::reported(
        "clean-syndrome-weight",
        "mean probability that the detached ancilla reads a = 0",
        outcomes.iter().map(|o| o.clean_syndrome_weight).sum::<f64>() / outcomes.len() as f64,
    ));
    Ok(checks)
}

pub fn cmd_recover(config: &ExperimentConfig) -> anyhow::Result<Report> {
    let code = config.code.load()?;
    let checks = recover_checks(&code, config)?;
    Ok(Report::new(config, code_summary(&code), checks))
}

// ---------------------------------------------------------------- constraints

#[derive(Clone, Debug, Default)]
struct ConstraintTrial {
    gauge_fidelity: f64,
    sector_mixing: f64,
    homomorphism: f64,
    representation_unitarity: f64,
    expansion: f64,
    closure: f64,
    closure_hermiticity: f64,
    closure_legal: f64,
    scalar_product: f64,
    multi_legal: f64,
    multi_corrupted: f64,
}

fn random_legal(code: &QuantumCode, rng: &mut SimRng) -> anyhow::Result<codeword::DenseOperator> {
    let u = haar_unitary(2, rng);
    let g = little_group_element_with(code.ancilla_qubits(), rng)?;
    Ok(legal_lift(code, &u, &g)?)
}

/// Two codewords in a random (generally entangled) legal state.
fn two_codeword_state(code: &QuantumCode, chi: &StateVector) -> anyhow::Result<StateVector> {
    let mut acc = StateVector::zeros(&[code.dim(), code.dim()]);
    for i in 0..2 {
        for j in 0..2 {
            let term = code.codeword(i).tensor(code.codeword(j)).with_factors(vec![code.dim(), code.dim()])?;
            acc = acc.add(&term.scaled(chi.amplitude(2 * i + j)))?;
        }
    }
    Ok(acc)
}

fn constraint_trial(code: &QuantumCode, cs: &ConstraintSet, config: &ExperimentConfig, t: usize) -> anyhow::Result<ConstraintTrial> {
    let mut rng = seeded_rng(trial_seed(config, t));
    let mut out = ConstraintTrial::default();
    let s = code.syndrome_count();
    let k = cs.count();

    let psi = random_state(&[2], &mut rng);
    let g = gauge_lift(code, &haar_unitary(s, &mut rng))?;
    let moved = apply(&g, &codeword::codes::encode(code, &psi)?)?;
    out.gauge_fidelity = recover_by_decoding(code, &moved, &psi).map(|r| r.fidelity).unwrap_or(0.0);
    out.sector_mixing = sector_mixing(code, &g)?;

    let w1 = random_legal(code, &mut rng)?;
    let w2 = random_legal(code, &mut rng)?;
    let a1 = representation_matrix(cs, &w1)?;
    let a2 = representation_matrix(cs, &w2)?;
    let a12 = representation_matrix(cs, &w1.compose(&w2)?)?;
    out.homomorphism = a12.matrix.max_abs_diff(&a1.matrix.compose(&a2.matrix)?);
    out.representation_unitarity = a1.matrix.unitarity_defect().max(a2.matrix.unitarity_defect());
    out.expansion = a1.expansion_residual.max(a2.expansion_residual).max(a12.expansion_residual);

    let m = constraint_operator(cs, random_hermitian(k, &mut rng))?;
    let n = constraint_operator(cs, random_hermitian(k, &mut rng))?;
    let closure = commutator_closure(&m, &n)?;
    out.closure = closure.residual;
    out.closure_hermiticity = closure.p.operator().hermiticity_defect();
    out.closure_legal = closure.p.legal_residual();

    let phi = random_state(&[2], &mut rng);
    let c = random_coefficients(s, &mut rng);
    out.scalar_product = scalar_product_check(code, &phi, &psi, &c)?.deviation;

    let chi = random_state(&[2, 2], &mut rng);
    let legal = two_codeword_state(code, &chi)?;
    out.multi_legal = multi_codeword_constraint(&[m.clone(), n.clone()], &legal)?;
    let c1 = random_coefficients(s, &mut rng);
    let c2 = random_coefficients(s, &mut rng);
    let e1 = codeword::errors::coherent_operator(code, &c1)?.with_factors(vec![code.dim()])?;
    let e2 = codeword::errors::coherent_operator(code, &c2)?.with_factors(vec![code.dim()])?;
    let corrupted = apply_local(&e2, &[1], &apply_local(&e1, &[0], &legal)?)?;
    out.multi_corrupted = multi_codeword_constraint(&[m, n], &corrupted)?;
    Ok(out)
}

pub fn constraint_checks(code: &QuantumCode, config: &ExperimentConfig) -> anyhow::Result<Vec<Check>> {
    let cs = constraint_basis(code);
    let n = code.ancilla_qubits();
    let mut checks = vec![
        Check::count("constraint-count", "constraint vectors = 2(2^n - 1)", 2 * ((1 << n) - 1), cs.count()),
        Check::bounded("constraint-orthonormality", "<C_a, C_b> = delta_ab", cs.orthonormality_defect(), BASIS_TOL),
        Check::bounded("constraint-legal-overlap", "<C_a, encode(psi)> = 0", cs.legal_overlap(), BASIS_TOL),
    ];
    let error_op = codeword::codes::standard_error_operator(code, 1)?;
    checks.push(match representation_matrix(&cs, &error_op) {
        Err(Error::NotLegal { residual }) => Check::bounded(
            "illegal-operator-rejected",
            "a standard error does not preserve the legal span",
            0.0,
            0.0,
        )
        .with_detail(format!("legality residual {residual:.3e}")),
        Ok(_) => Check::failed("illegal-operator-rejected", "a standard error does not preserve the legal span", "accepted as legal"),
        Err(e) => Check::failed("illegal-operator-rejected", "a standard error does not preserve the legal span", e.to_string()),
    });

    let trials = (0..config.trials)
        .into_par_iter()
        .map(|t| constraint_trial(code, &cs, config, t))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let max = |f: fn(&ConstraintTrial) -> f64| max_of(trials.iter().map(f));
    let gauge: Vec<f64> = trials.iter().map(|t| t.gauge_fidelity).collect();
    checks.push(
        Check::bounded("gauge-invariance", "decode(G encode(psi)) has logical factor psi", 1.0 - min_of(gauge.iter().copied()), RECOVERY_TOL)
            .with_fidelity(&gauge),
    );
    checks.push(Check::bounded("gauge-sector-preservation", "<Z_a^(1), G Z_b^(0)> = 0", max(|t| t.sector_mixing), LEGAL_TOL));
    checks.push(Check::bounded("representation-homomorphism", "A(W1 W2) = A(W1) A(W2)", max(|t| t.homomorphism), LEGAL_TOL));
    checks.push(Check::bounded("representation-unitarity", "A(W)^dagger A(W) = 1", max(|t| t.representation_unitarity), LEGAL_TOL));
    checks.push(Check::bounded("representation-expansion", "W C_a = sum_b A_ba C_b", max(|t| t.expansion), LEGAL_TOL));
    checks.push(Check::bounded("commutator-closure", "[M, N] = iP", max(|t| t.closure), LEGAL_TOL));
    checks.push(Check::bounded("commutator-hermitian", "P = P^dagger", max(|t| t.closure_hermiticity), BASIS_TOL));
    checks.push(Check::bounded("commutator-legal", "P encode(psi) = 0", max(|t| t.closure_legal), LEGAL_TOL));
    checks.push(Check::bounded("multi-codeword-legal", "(M x N) psi_legal = 0", max(|t| t.multi_legal), LEGAL_TOL));
    checks.push(Check::reported(
        "multi-codeword-corrupted",
        "(M x N) psi for coherently corrupted codewords",
        max(|t| t.multi_corrupted),
    ));
    checks.push(Check::bounded("scalar-product", "<Phi, Psi> = <phi, psi> with a shared ancilla", max(|t| t.scalar_product), EXACT_TOL));
    Ok(checks)
}

pub fn cmd_constraints(config: &ExperimentConfig) -> anyhow::Result<Report> {
    let code = config.code.load()?;
    let checks = constraint_checks(&code, config)?;
    Ok(Report::new(config, code_summary(&code), checks))
}

// ---------------------------------------------------------------- export-spec

/// Renders the spec, re-ingests it, and writes it to `config.output_path` if set.
pub fn cmd_export_spec(config: &ExperimentConfig) -> anyhow::Result<(String, Report)> {
    let code = config.code.load()?;
    let text = render_spec(code.spec());
    let back = build_code(parse_spec(&text)?)?;
    let same = back.encoding_checksum() == code.encoding_checksum();
    let check = Check::bounded(
        "export-round-trip",
        "E rebuilt from the exported file has the same checksum",
        if same { 0.0 } else { 1.0 },
        0.0,
    );
    if let Some(path) = &config.output_path {
        write_file(path, &text)?;
    }
    Ok((text, Report::new(config, code_summary(&code), vec![check])))
}

pub fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Status;
    use codeword::codes::BuiltinCode;

    #[test]
    fn verify_reports() {
        let cfg = ExperimentConfig::new(Command::Verify, BuiltinCode::Perfect5);
        let r = run(&cfg).unwrap();
        assert!(r.passed());
        assert_eq!(r.checks.iter().filter(|c| c.name.starts_with("qubit-products")).count(), 5);

        let cfg = ExperimentConfig::new(Command::Verify, BuiltinCode::Repetition3);
        let r = run(&cfg).unwrap();
        assert!(r.passed());
        assert_eq!(r.check("qubit-products[0]").unwrap().status, Status::ExpectedFail);
    }

    #[test]
    fn recover_identity_environment() {
        let spec: ErrorSpec = "env:qubit=0,v=identity".parse().unwrap();
        let cfg = ExperimentConfig::new(Command::Recover, BuiltinCode::Perfect5).with_trials(1).with_error(spec);
        let r = run(&cfg).unwrap();
        assert!(r.passed(), "{}", r.to_table());
        assert!((r.check("clean-syndrome-weight").unwrap().residual - 1.0).abs() < 1e-12);
    }

    #[test]
    fn recover_flags_incorrigible_errors() {
        let spec: ErrorSpec = "env:dim=2".parse().unwrap();
        let cfg = ExperimentConfig::new(Command::Recover, BuiltinCode::Repetition3).with_trials(6).with_error(spec);
        let r = run(&cfg).unwrap();
        assert!(!r.passed());
    }

    #[test]
    fn constraints_small() {
        let cfg = ExperimentConfig::new(Command::Constraints, BuiltinCode::Repetition3).with_trials(4);
        let r = run(&cfg).unwrap();
        assert!(r.passed(), "{}", r.to_table());
        assert_eq!(r.check("constraint-count").unwrap().detail.as_deref(), Some("expected 6, found 6"));
    }

    #[test]
    fn export_round_trip() {
        let cfg = ExperimentConfig::new(Command::ExportSpec, BuiltinCode::Repetition3);
        let (text, r) = cmd_export_spec(&cfg).unwrap();
        assert!(r.passed());
        assert!(text.contains("[logical_basis]"));
    }
}
