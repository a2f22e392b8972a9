//! Acceptance gate: one test per criterion, each printing a single
//! PASS/FAIL line (uncaptured, so it shows in the normal test output) and
//! enforcing the recipe's wall-clock budget.

use std::io::Write;
use std::time::Instant;

use akpz_cli::config::{Experiment, ExperimentConfig};
use akpz_cli::recipes::{budget, run_experiment};

fn gate(e: Experiment) {
    let start = Instant::now();
    let report = run_experiment(&ExperimentConfig::new(e)).unwrap_or_else(|err| panic!("{e}: {err}"));
    let elapsed = start.elapsed();
    let mut line = format!(
        "criterion {:>2} {:<24} {} ({}/{} rows, {:.2?})",
        e.criterion(),
        e.name(),
        if report.passed() { "PASS" } else { "FAIL" },
        report.pass_count(),
        report.rows.len(),
        elapsed
    );
    for row in report.failures() {
        line.push_str(&format!("\n    failed: {} ({}={:.6e}, {}={:.6e}, diff={:.3e}, tol={:.1e})", row.query, row.method_a, row.value_a, row.method_b, row.value_b, row.difference, row.tolerance));
    }
    writeln!(std::io::stderr(), "{line}").unwrap();
    assert!(elapsed <= budget(e), "{e}: runtime {elapsed:.2?} exceeds {:?}", budget(e));
    assert!(report.passed(), "{e}: {}\n{}", report.summary(), report.to_table());
}

#[test]
fn criterion_01_stationarity() {
    gate(Experiment::StationarityOracle);
}

#[test]
fn criterion_02_symbol_identities() {
    gate(Experiment::SymbolIdentities);
}

#[test]
fn criterion_03_negativity() {
    gate(Experiment::Negativity);
}

#[test]
fn criterion_04_microscopic_linearization() {
    gate(Experiment::Linearization);
}

#[test]
fn criterion_05_drift_speed() {
    gate(Experiment::DriftCheck);
}

#[test]
fn criterion_06_characteristic_gradient() {
    gate(Experiment::CharacteristicGradient);
}

#[test]
fn criterion_07_sde_vs_exact_covariance() {
    gate(Experiment::SdeVsExact);
}

#[test]
fn criterion_08_equal_time_log_growth() {
    gate(Experiment::Cor1LogGrowth);
}

#[test]
fn criterion_09_slow_decorrelation() {
    gate(Experiment::Cor2Characteristic);
}

#[test]
fn criterion_10_she_limit() {
    gate(Experiment::Cor3She);
}

#[test]
fn criterion_11_stationary_measure_gff() {
    gate(Experiment::GffVariance);
}

#[test]
fn criterion_12_qpoch_asymptotics() {
    gate(Experiment::QpochAsymptotics);
}
