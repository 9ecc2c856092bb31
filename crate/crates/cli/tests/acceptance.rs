//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::{Command as Process, ExitCode};
use std::time::{Duration, Instant};

use codeword::codes::{build_builtin, encode, standard_error_operator, verify_qubit_products, BuiltinCode, QuantumCode};
use codeword::constraints::{
    commutator_closure, constraint_basis, constraint_operator, gauge_lift, legal_lift, little_group_element_with,
    representation_matrix, scalar_product_check, sector_mixing,
};
use codeword::errors::{
    apply_coherent, apply_mixture, branch_decompose, branch_reconstruction, entangle_environment, EnvironmentModel,
    MixtureTerm,
};
use codeword::hilbert::{
    apply, haar_unitary, mix_seed, random_coefficients, random_hermitian, random_state, seeded_rng, DensityMatrix,
    StateVector, C64,
};
use codeword::recovery::{
    build_syndrome_transfer, fidelity, recover_by_decoding, recover_by_decoding_keeping, recover_in_place,
    recover_mixture, LogicalState,
};
use codeword_cli::suites::plus_i;
use codeword_cli::{run, Command, ExperimentConfig};
use rand::Rng;
use rayon::prelude::*;

const SEED: u64 = 0x00c0_de00;

const COUNT_BUDGET: Duration = Duration::from_secs(1);
const PRODUCT_BUDGET: Duration = Duration::from_secs(5);
const ENVIRONMENT_BUDGET: Duration = Duration::from_secs(60);

const SCHMIDT_TOL: f64 = 1e-8;
const FIDELITY_TOL: f64 = 1e-10;
const RECONSTRUCTION_TOL: f64 = 1e-10;
const MIXTURE_TOL: f64 = 1e-10;
const TRANSFER_UNITARY_TOL: f64 = 1e-12;
const HOMOMORPHISM_TOL: f64 = 1e-10;
const CLOSURE_TOL: f64 = 1e-10;
const GAUGE_TOL: f64 = 1e-10;
const SCALAR_PRODUCT_TOL: f64 = 1e-12;

const ENV_MODELS: usize = 100;
const RANDOM_LOGICAL_STATES: usize = 20;
const MIXTURES: usize = 50;
const MAX_MIXTURE_TERMS: usize = 4;
const COHERENT_TRANSFER_TRIALS: usize = 20;
const GAUGE_SAMPLES: usize = 100;
const HOMOMORPHISM_PAIRS: usize = 50;
const CLOSURE_PAIRS: usize = 50;
const SCALAR_TRIPLES: usize = 1000;
const BELL_TRIALS: usize = 50;

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn codes() -> Vec<QuantumCode> {
    [BuiltinCode::Repetition3, BuiltinCode::Perfect5, BuiltinCode::Steane7].into_iter().map(build_builtin).collect()
}

fn correcting_codes() -> Vec<QuantumCode> {
    [BuiltinCode::Perfect5, BuiltinCode::Steane7].into_iter().map(build_builtin).collect()
}

fn within(elapsed: Duration, budget: Duration) -> Outcome {
    ensure(elapsed < budget, format!("{:.3}s of {:.0}s budget", elapsed.as_secs_f64(), budget.as_secs_f64()))
}

fn counting() -> Outcome {
    let start = Instant::now();
    let mut found = Vec::new();
    for code in codes() {
        found.push((
            code.name().to_string(),
            code.syndrome_count(),
            code.physical_basis().len(),
            constraint_basis(&code).count(),
        ));
    }
    let elapsed = start.elapsed();
    let expected = [("repetition3", 4, 8, 6), ("perfect5", 16, 32, 30), ("steane7", 64, 128, 126)];
    for ((name, s, b, c), (en, es, eb, ec)) in found.iter().zip(expected) {
        if name != en || *s != es || *b != eb || *c != ec {
            return Err(format!("{name}: {s} errors, {b} basis vectors, {c} constraints"));
        }
    }
    let steane = build_builtin(BuiltinCode::Steane7);
    let partition = steane.spec().weight_partition();
    if partition != [1, 21, 42] {
        return Err(format!("steane7 weight partition {partition:?}"));
    }
    let time = within(elapsed, COUNT_BUDGET)?;
    Ok(format!("errors 4/16/64, basis 8/32/128, constraints 6/30/126; {time}"))
}

fn products() -> Outcome {
    let start = Instant::now();
    let mut lines = Vec::new();
    for code in codes() {
        let mut worst: f64 = 0.0;
        for k in 0..code.n_physical() {
            let r = verify_qubit_products(&code, k).map_err(|e| e.to_string())?;
            if r.products.len() != 10 {
                return Err(format!("{}: {} products at qubit {k}", code.name(), r.products.len()));
            }
            worst = worst.max(r.max_deviation().max(r.branch_gram_deviation));
        }
        let passed = worst <= codeword::hilbert::NORM_TOL;
        let expect_pass = !code.spec().is_bit_flip_only();
        if passed != expect_pass {
            return Err(format!("{}: worst deviation {worst:.3e}", code.name()));
        }
        lines.push(format!("{} {}", code.name(), if passed { "pass" } else { "expected-fail" }));
    }
    let time = within(start.elapsed(), PRODUCT_BUDGET)?;
    Ok(format!("{}; {time}", lines.join(", ")))
}

fn logical_states() -> Vec<StateVector> {
    let mut rng = seeded_rng(mix_seed(SEED, 3));
    let mut states = vec![plus_i()];
    states.extend((0..RANDOM_LOGICAL_STATES).map(|_| random_state(&[2], &mut rng)));
    states
}

fn environment_recovery() -> Outcome {
    let start = Instant::now();
    let states = logical_states();
    let mut runs = 0usize;
    let mut worst_schmidt: f64 = 0.0;
    let mut worst_fid: f64 = 1.0;
    for code in correcting_codes() {
        let encoded: Vec<StateVector> = states.iter().map(|s| encode(&code, s)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
        let jobs: Vec<(usize, usize, usize)> = (0..code.n_physical())
            .flat_map(|k| [2usize, 4].into_iter().flat_map(move |d| (0..ENV_MODELS).map(move |m| (k, d, m))))
            .collect();
        let results = jobs
            .par_iter()
            .map(|&(k, d, m)| -> Result<(f64, f64), String> {
                let model = EnvironmentModel::random(d, mix_seed(SEED, (k * 1000 + d * 100 + m) as u64)).map_err(|e| e.to_string())?;
                let mut schmidt: f64 = 0.0;
                let mut fid: f64 = 1.0;
                for (psi, enc) in states.iter().zip(&encoded) {
                    let corrupted = entangle_environment(&code, enc, k, &model).map_err(|e| e.to_string())?;
                    let r = recover_by_decoding(&code, &corrupted, psi)
                        .map_err(|e| format!("{} qubit {k} d={d} model {m}: {e}", code.name()))?;
                    schmidt = schmidt.max(r.factored.as_ref().map_or(0.0, |f| f.second_schmidt()));
                    fid = fid.min(r.fidelity);
                }
                Ok((schmidt, fid))
            })
            .collect::<Result<Vec<_>, _>>()?;
        for (s, f) in results {
            worst_schmidt = worst_schmidt.max(s);
            worst_fid = worst_fid.min(f);
            runs += states.len();
        }
    }
    let time = within(start.elapsed(), ENVIRONMENT_BUDGET)?;
    ensure(
        worst_schmidt <= SCHMIDT_TOL && 1.0 - worst_fid <= FIDELITY_TOL,
        format!("{runs} recoveries, max second Schmidt {worst_schmidt:.2e}, min fidelity 1-{:.2e}; {time}", 1.0 - worst_fid),
    )
}

fn reconstruction() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for code in codes() {
        for m in 0..ENV_MODELS {
            let seed = mix_seed(SEED ^ 0x44, m as u64);
            let mut rng = seeded_rng(seed);
            let d = [2, 3, 4][m % 3];
            let k = rng.random_range(0..code.n_physical());
            let model = EnvironmentModel::random(d, mix_seed(seed, 1)).map_err(|e| e.to_string())?;
            let psi = encode(&code, &random_state(&[2], &mut rng)).map_err(|e| e.to_string())?;
            let direct = entangle_environment(&code, &psi, k, &model).map_err(|e| e.to_string())?;
            let rebuilt = branch_reconstruction(&code, &psi, k, &branch_decompose(&model)).map_err(|e| e.to_string())?;
            worst = worst.max(direct.max_abs_diff(&rebuilt));
            runs += 1;
        }
    }
    ensure(worst <= RECONSTRUCTION_TOL, format!("{runs} models, max deviation {worst:.2e}"))
}

fn random_mixture(s: usize, rng: &mut impl Rng) -> Vec<MixtureTerm> {
    let terms = rng.random_range(1..=MAX_MIXTURE_TERMS);
    let raw: Vec<f64> = (0..terms).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|p| MixtureTerm { probability: p / total, coefficients: random_coefficients(s, rng) }).collect()
}

fn mixtures() -> Outcome {
    let mut worst: f64 = 0.0;
    for code in codes() {
        let mut rng = seeded_rng(mix_seed(SEED, 5));
        for _ in 0..MIXTURES {
            let psi = random_state(&[2], &mut rng);
            let terms = random_mixture(code.syndrome_count(), &mut rng);
            let rho = apply_mixture(&code, &encode(&code, &psi).map_err(|e| e.to_string())?, &terms).map_err(|e| e.to_string())?;
            let r = recover_mixture(&code, &rho, &psi).map_err(|e| format!("{}: {e}", code.name()))?;
            let recovered = match &r.logical {
                LogicalState::Pure(p) => DensityMatrix::from_pure(p),
                LogicalState::Mixed(m) => m.clone(),
            };
            worst = worst.max(recovered.max_abs_diff(&DensityMatrix::from_pure(&psi)));
        }
    }
    ensure(worst <= MIXTURE_TOL, format!("{} mixtures per code, max deviation {worst:.2e}", MIXTURES))
}

fn transfer() -> Outcome {
    let mut notes = Vec::new();
    let mut worst_fid: f64 = 1.0;
    let mut worst_agree: f64 = 1.0;
    for code in codes() {
        let t = build_syndrome_transfer(&code).map_err(|e| e.to_string())?;
        let n = code.ancilla_qubits();
        if t.order() != 1 << (2 * n + 1) {
            return Err(format!("{}: order {}", code.name(), t.order()));
        }
        let columns = t.specified_column_defect(&code).map_err(|e| e.to_string())?;
        if columns > TRANSFER_UNITARY_TOL {
            return Err(format!("{}: specified columns off by {columns:.2e}", code.name()));
        }
        match t.dense() {
            Some(op) => {
                let defect = op.unitarity_defect();
                if defect > TRANSFER_UNITARY_TOL {
                    return Err(format!("{}: unitarity defect {defect:.2e}", code.name()));
                }
                notes.push(format!("{} dense {}", code.name(), t.order()));
            }
            None => notes.push(format!("{} columns-only {}", code.name(), t.order())),
        }
        let mut rng = seeded_rng(mix_seed(SEED, 6));
        let mut cases = Vec::new();
        for a in 0..code.syndrome_count() {
            let psi = random_state(&[2], &mut rng);
            let enc = encode(&code, &psi).map_err(|e| e.to_string())?;
            let op = standard_error_operator(&code, a).map_err(|e| e.to_string())?;
            cases.push((psi, enc.clone(), apply(&op, &enc).map_err(|e| e.to_string())?));
        }
        for _ in 0..COHERENT_TRANSFER_TRIALS {
            let psi = random_state(&[2], &mut rng);
            let enc = encode(&code, &psi).map_err(|e| e.to_string())?;
            let c = random_coefficients(code.syndrome_count(), &mut rng);
            let bad = apply_coherent(&code, &enc, &c).map_err(|e| e.to_string())?;
            cases.push((psi, enc, bad));
        }
        for (psi, enc, bad) in &cases {
            let in_place = recover_in_place(&code, bad, &t, psi).map_err(|e| format!("{}: {e}", code.name()))?;
            let restored = in_place.restored_codeword.as_ref().ok_or("no restored codeword")?;
            let restored = restored.with_factors(enc.factors().to_vec()).map_err(|e| e.to_string())?;
            let f = fidelity(&restored, enc).map_err(|e| e.to_string())?;
            worst_fid = worst_fid.min(f).min(in_place.fidelity);
            let decoded = recover_by_decoding(&code, bad, psi).map_err(|e| e.to_string())?;
            let (LogicalState::Pure(a), LogicalState::Pure(b)) = (&decoded.logical, &in_place.logical) else {
                return Err("mixed logical state from a pure input".into());
            };
            worst_agree = worst_agree.min(fidelity(a, b).map_err(|e| e.to_string())?);
        }
    }
    ensure(
        1.0 - worst_fid <= FIDELITY_TOL && 1.0 - worst_agree <= FIDELITY_TOL,
        format!(
            "{}; restored fidelity 1-{:.2e}, agreement 1-{:.2e}",
            notes.join(", "),
            1.0 - worst_fid,
            1.0 - worst_agree
        ),
    )
}

fn gauge_and_constraints() -> Outcome {
    let mut gauge: f64 = 0.0;
    let mut hom: f64 = 0.0;
    let mut closure: f64 = 0.0;
    let mut scalar: f64 = 0.0;
    for code in codes() {
        let name = code.name().to_string();
        let err = |e: codeword::Error| format!("{name}: {e}");
        let cs = constraint_basis(&code);
        let s = code.syndrome_count();
        let mut rng = seeded_rng(mix_seed(SEED, 7));
        for _ in 0..GAUGE_SAMPLES {
            let psi = random_state(&[2], &mut rng);
            let g = gauge_lift(&code, &haar_unitary(s, &mut rng)).map_err(err)?;
            let moved = apply(&g, &encode(&code, &psi).map_err(err)?).map_err(err)?;
            let r = recover_by_decoding(&code, &moved, &psi).map_err(err)?;
            gauge = gauge.max(1.0 - r.fidelity).max(sector_mixing(&code, &g).map_err(err)?);
            let little = little_group_element_with(code.ancilla_qubits(), &mut rng).map_err(err)?;
            let w = legal_lift(&code, &haar_unitary(2, &mut rng), &little).map_err(err)?;
            gauge = gauge.max(cs.legality_residual(&w).map_err(err)?);
        }
        for _ in 0..HOMOMORPHISM_PAIRS {
            let mut legal = || -> Result<_, String> {
                let g = little_group_element_with(code.ancilla_qubits(), &mut rng).map_err(err)?;
                legal_lift(&code, &haar_unitary(2, &mut rng), &g).map_err(err)
            };
            let (w1, w2) = (legal()?, legal()?);
            let a1 = representation_matrix(&cs, &w1).map_err(err)?;
            let a2 = representation_matrix(&cs, &w2).map_err(err)?;
            let a12 = representation_matrix(&cs, &w1.compose(&w2).map_err(err)?).map_err(err)?;
            hom = hom.max(a12.matrix.max_abs_diff(&a1.matrix.compose(&a2.matrix).map_err(err)?));
        }
        for _ in 0..CLOSURE_PAIRS {
            let m = constraint_operator(&cs, random_hermitian(cs.count(), &mut rng)).map_err(err)?;
            let n = constraint_operator(&cs, random_hermitian(cs.count(), &mut rng)).map_err(err)?;
            let c = commutator_closure(&m, &n).map_err(err)?;
            closure = closure.max(c.residual).max(c.p.operator().hermiticity_defect()).max(c.p.legal_residual());
        }
        for _ in 0..SCALAR_TRIPLES {
            let phi = random_state(&[2], &mut rng);
            let psi = random_state(&[2], &mut rng);
            let c = random_coefficients(s, &mut rng);
            scalar = scalar.max(scalar_product_check(&code, &phi, &psi, &c).map_err(err)?.deviation);
        }
    }
    ensure(
        gauge <= GAUGE_TOL && hom <= HOMOMORPHISM_TOL && closure <= CLOSURE_TOL && scalar <= SCALAR_PRODUCT_TOL,
        format!("gauge {gauge:.2e}, homomorphism {hom:.2e}, closure {closure:.2e}, scalar products {scalar:.2e}"),
    )
}

fn bell_pair() -> Outcome {
    let code = build_builtin(BuiltinCode::Perfect5);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let bell = StateVector::from_vec(
        vec![C64::new(h, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(h, 0.0)],
        vec![2, 2],
    )
    .map_err(|e| e.to_string())?;
    let mut encoded: Option<StateVector> = None;
    for i in 0..2 {
        let term = code.codeword(i).tensor(&StateVector::basis(&[2], i).map_err(|e| e.to_string())?).scaled(C64::new(h, 0.0));
        encoded = Some(match encoded {
            Some(acc) => acc.add(&term).map_err(|e| e.to_string())?,
            None => term,
        });
    }
    let encoded = encoded.expect("two terms");
    let mut worst: f64 = 1.0;
    for t in 0..BELL_TRIALS {
        let seed = mix_seed(SEED ^ 0xbe11, t as u64);
        let model = EnvironmentModel::random([2, 4][t % 2], seed).map_err(|e| e.to_string())?;
        let k = t % code.n_physical();
        let corrupted = entangle_environment(&code, &encoded, k, &model).map_err(|e| e.to_string())?;
        let r = recover_by_decoding_keeping(&code, &corrupted, &bell, &[0]).map_err(|e| format!("trial {t}: {e}"))?;
        worst = worst.min(r.fidelity);
    }
    ensure(1.0 - worst <= FIDELITY_TOL, format!("{BELL_TRIALS} trials, min joint fidelity 1-{:.2e}", 1.0 - worst))
}

fn determinism() -> Outcome {
    let configs = [
        ExperimentConfig::new(Command::Recover, BuiltinCode::Steane7).with_seed(17).with_trials(8),
        ExperimentConfig::new(Command::Constraints, BuiltinCode::Perfect5).with_seed(17).with_trials(8),
    ];
    for cfg in &configs {
        let a = run(cfg).map_err(|e| e.to_string())?.to_json();
        let b = run(cfg).map_err(|e| e.to_string())?.to_json();
        if a != b {
            return Err(format!("{} reports differ between library runs", cfg.command));
        }
    }
    let args = ["recover", "--code", "perfect5", "--seed", "17", "--trials", "8", "--error", "mixture:terms=3", "--format", "json"];
    let out = || Process::new(env!("CARGO_BIN_EXE_codeword")).args(args).output().map_err(|e| e.to_string());
    let (a, b) = (out()?, out()?);
    ensure(
        a.status.success() && !a.stdout.is_empty() && a.stdout == b.stdout,
        format!("library and binary JSON byte-identical ({} bytes)", a.stdout.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("counting identities", counting),
        ("per-qubit product relations", products),
        ("environment recovery", environment_recovery),
        ("branch reconstruction", reconstruction),
        ("mixed coherent errors", mixtures),
        ("syndrome transfer", transfer),
        ("gauge, representation and constraints", gauge_and_constraints),
        ("entangled partner survives recovery", bell_pair),
        ("deterministic reports", determinism),
    ];
    let mut failures = 0;
    for (i, (title, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        let (label, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!("{label} [{}] {title}: {detail} ({secs:.2}s)", i + 1);
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
