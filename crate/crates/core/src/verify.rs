//! One-shot verification suite: the exactly-known properties of the model
//! run as checks with hard tolerances. Used by the `verify` CLI command.
//!
//! Checks: 4π periodicity of the spectrum, reflection symmetry about 2π,
//! the torsion–rotation phase-cancellation identity, the spectrum collapse
//! at 2π (integer J only), and the J=2 odd-sector crossing pattern at
//! ℏ_η ∈ {2π/3, 2π, 10π/3} with its α-independence.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::crossings::{
    crossing_alpha_independent, find_crossings, CrossingKind, ScanConfig, SectorPair, SectorSelect,
};
use crate::floquet::{bch_rhs, floquet_first_three, FloquetAssembler, ModelParams};
use crate::spectrum::{symmetry_check, SymmetryMode};
use crate::su2::max_entry_distance;
use crate::{CMat, HETA_PERIOD};

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.to_string(), passed, detail }
    }
}

/// Run the verification suite for the given J and αJ. All numeric
/// tolerances are fixed here, not configurable.
pub fn run_verification(two_j: u32, alpha_scaled: f64, rng_seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut results = Vec::new();
    let params = ModelParams::new(two_j, alpha_scaled, 0.0);

    // 4π periodicity of the spectrum.
    let hetas: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..HETA_PERIOD)).collect();
    match symmetry_check(&params, SymmetryMode::Periodicity, &hetas) {
        Ok(rep) => results.push(CheckResult::new(
            "periodicity-4pi",
            rep.passed,
            format!("max multiset distance {:.3e} (tol 1e-10)", rep.max_deviation),
        )),
        Err(e) => results.push(CheckResult::new("periodicity-4pi", false, e.to_string())),
    }

    // Reflection symmetry about ℏ_η = 2π.
    let hetas: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..HETA_PERIOD)).collect();
    match symmetry_check(&params, SymmetryMode::Reflection, &hetas) {
        Ok(rep) => results.push(CheckResult::new(
            "reflection-2pi",
            rep.passed,
            format!("max multiset distance {:.3e} (tol 1e-10)", rep.max_deviation),
        )),
        Err(e) => results.push(CheckResult::new("reflection-2pi", false, e.to_string())),
    }

    // Phase-cancellation identity: first three factors vs the closed form.
    {
        let mut worst = 0.0f64;
        let mut failed = None;
        for _ in 0..8 {
            let p = ModelParams::new(
                two_j,
                rng.gen_range(0.0..4.0),
                rng.gen_range(0.0..HETA_PERIOD),
            );
            match (floquet_first_three(&p), bch_rhs(&p)) {
                (Ok(lhs), Ok(rhs)) => {
                    worst = worst.max(max_entry_distance(&lhs.matrix, &rhs.matrix));
                }
                (Err(e), _) | (_, Err(e)) => {
                    failed = Some(e.to_string());
                    break;
                }
            }
        }
        let passed = failed.is_none() && worst <= 1e-11;
        results.push(CheckResult::new(
            "phase-cancellation-identity",
            passed,
            failed.unwrap_or(format!("max entry deviation {worst:.3e} (tol 1e-11)")),
        ));
    }

    // Collapse at 2π (integer J collapses, half-integer must not).
    match symmetry_check(&params, SymmetryMode::Collapse, &[]) {
        Ok(rep) => {
            let expect = if two_j % 2 == 0 { "spread ≤ 1e-10" } else { "spread ≥ 0.1" };
            results.push(CheckResult::new(
                "collapse-at-2pi",
                rep.passed,
                format!("spread {:.3e} ({expect})", rep.max_deviation),
            ));
        }
        Err(e) => results.push(CheckResult::new("collapse-at-2pi", false, e.to_string())),
    }

    // J=2 crossing pattern (independent of the J under test).
    results.push(j2_crossing_check(alpha_scaled));

    results
}

fn j2_crossing_check(alpha_scaled: f64) -> CheckResult {
    let name = "j2-odd-sector-crossings";
    let p = ModelParams::new(4, alpha_scaled, 0.0);
    let cfg = ScanConfig::default();

    // Odd block must be the exact identity at ℏ_η = 2π/3.
    let assembler = match FloquetAssembler::new(&p) {
        Ok(a) => a,
        Err(e) => return CheckResult::new(name, false, e.to_string()),
    };
    let two_thirds = 2.0 * std::f64::consts::PI / 3.0;
    let (_, odd) = assembler.block_operators_at(two_thirds).expect("XX splits into blocks");
    let identity_dev = max_entry_distance(&odd.matrix, &CMat::identity(2, 2));
    if identity_dev > 1e-12 {
        return CheckResult::new(name, false, format!("odd block deviates from identity by {identity_dev:.3e} at 2π/3"));
    }

    let records = match find_crossings(&p, SectorSelect::All, (0.0, HETA_PERIOD), &cfg) {
        Ok(r) => r,
        Err(e) => return CheckResult::new(name, false, e.to_string()),
    };
    let odd_true: Vec<f64> = records
        .iter()
        .filter(|r| r.kind == CrossingKind::SameParity && r.sector_pair == SectorPair::OddOdd)
        .map(|r| r.heta_star)
        .collect();
    let even_true = records
        .iter()
        .filter(|r| r.kind == CrossingKind::SameParity && r.sector_pair == SectorPair::EvenEven)
        .count();
    let collapse = records
        .iter()
        .any(|r| r.kind == CrossingKind::Collapse && (r.heta_star - std::f64::consts::TAU).abs() < 1e-9);

    let expected = [two_thirds, 5.0 * two_thirds];
    let odd_ok = odd_true.len() == 2
        && odd_true
            .iter()
            .zip(&expected)
            .all(|(got, want)| (got - want).abs() < 1e-9);

    let alpha_ok = match crossing_alpha_independent(
        &p,
        two_thirds,
        SectorSelect::Odd,
        &[0.5, 1.0, 2.0, 5.0],
        &cfg,
        1e-6,
    ) {
        Ok(v) => v,
        Err(e) => return CheckResult::new(name, false, e.to_string()),
    };

    let passed = odd_ok && even_true == 0 && collapse && alpha_ok;
    CheckResult::new(
        name,
        passed,
        format!(
            "odd crossings {odd_true:?} (want 2π/3, 10π/3), even true crossings {even_true} (want 0), collapse at 2π: {collapse}, α-independent: {alpha_ok}, identity dev {identity_dev:.3e}"
        ),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verification_suite_passes_for_j2() {
        let results = run_verification(4, 1.0, 42);
        for r in &results {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
        assert_eq!(results.len(), 5);
    }

    #[test]
    fn verification_suite_passes_for_half_integer_j() {
        let results = run_verification(9, 1.0, 43);
        for r in &results {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }
}
