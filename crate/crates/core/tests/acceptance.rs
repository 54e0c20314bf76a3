//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line with the measured quantities. Criteria hold a shared lock so the
//! reported runtimes are not distorted by concurrent tests.

use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use su2_butterfly::classical::{
    lyapunov_estimate, occupied_cell_fraction, poincare_section, random_seeds, section_points,
    ClassicalParams,
};
use su2_butterfly::crossings::{
    count_true_crossings, crossing_alpha_independent, find_crossings, scaling_fit, CrossingKind,
    ScanConfig, SectorPair, SectorSelect,
};
use su2_butterfly::dynamics::{
    autocorrelation, detect_peaks, fft_spectrum, overlap_weights, resynthesize, FftOptions,
};
use su2_butterfly::floquet::{
    bch_rhs, floquet_first_three, FloquetAssembler, ModelParams, Variant,
};
use su2_butterfly::fractal::dq_spectrum;
use su2_butterfly::io::{
    parse_tsv, render_tsv, ButterflyRow, DatasetMeta, TypedDataset,
};
use su2_butterfly::linalg::{circular_distance, circular_spread, multiset_circular_distance};
use su2_butterfly::spectrum::{eigenphases, floquet_eigenphases, ParityLabel};
use su2_butterfly::su2::max_entry_distance;
use su2_butterfly::{CMat, CVec, HETA_PERIOD};

fn serial() -> MutexGuard<'static, ()> {
    static LOCK: OnceLock<Mutex<()>> = OnceLock::new();
    LOCK.get_or_init(|| Mutex::new(())).lock().unwrap_or_else(|e| e.into_inner())
}

fn report(criterion: u32, passed: bool, runtime: std::time::Duration, detail: &str) {
    println!(
        "criterion {criterion:02} [{}] ({:.2?}) {detail}",
        if passed { "PASS" } else { "FAIL" },
        runtime
    );
    assert!(passed, "criterion {criterion} failed: {detail}");
}

const TAU: f64 = std::f64::consts::TAU;

/// Criterion 1 — Appendix-level exactness at J=2, αJ=1: the odd-parity
/// block of F at ℏ_η=2π/3 is the 2×2 identity to 1e−12; true odd-sector
/// crossings sit at 2π/3, 2π, 10π/3 and even-sector ones only at 2π; the
/// 2π/3 crossing is α-independent over αJ ∈ {0.5, 1, 2, 5}. Runtime < 1 s.
#[test]
fn criterion_01_j2_exactness() {
    let _guard = serial();
    let t0 = Instant::now();
    let p = ModelParams::new(4, 1.0, 0.0);
    let assembler = FloquetAssembler::new(&p).unwrap();
    let (_, odd) = assembler.block_operators_at(TAU / 3.0).unwrap();
    let identity_dev = max_entry_distance(&odd.matrix, &CMat::identity(2, 2));

    let cfg = ScanConfig::default();
    let records = find_crossings(&p, SectorSelect::All, (0.0, HETA_PERIOD), &cfg).unwrap();
    let odd_true: Vec<f64> = records
        .iter()
        .filter(|r| r.kind == CrossingKind::SameParity && r.sector_pair == SectorPair::OddOdd)
        .map(|r| r.heta_star)
        .collect();
    let even_true: Vec<f64> = records
        .iter()
        .filter(|r| r.kind == CrossingKind::SameParity && r.sector_pair == SectorPair::EvenEven)
        .map(|r| r.heta_star)
        .collect();
    let collapse_at_2pi = records
        .iter()
        .any(|r| r.kind == CrossingKind::Collapse && (r.heta_star - TAU).abs() < 1e-9);

    // Odd sector: true crossings at 2π/3 and 10π/3 plus the all-level
    // collapse at 2π; even sector: only the collapse.
    let odd_ok = odd_true.len() == 2
        && (odd_true[0] - TAU / 3.0).abs() < 1e-9
        && (odd_true[1] - 5.0 * TAU / 3.0).abs() < 1e-9;
    let even_ok = even_true.is_empty();

    let alpha_ok = crossing_alpha_independent(
        &p,
        TAU / 3.0,
        SectorSelect::Odd,
        &[0.5, 1.0, 2.0, 5.0],
        &cfg,
        1e-6,
    )
    .unwrap();

    let elapsed = t0.elapsed();
    let passed = identity_dev <= 1e-12
        && odd_ok
        && even_ok
        && collapse_at_2pi
        && alpha_ok
        && elapsed.as_secs_f64() < 1.0;
    report(
        1,
        passed,
        elapsed,
        &format!(
            "odd-block identity dev {identity_dev:.2e} (≤1e-12); odd crossings {odd_true:?} + collapse {collapse_at_2pi}; even extra {even_ok}; α-independent {alpha_ok}"
        ),
    );
}

/// Criterion 2 — collapse law: integer J ∈ {2,10,20,30} collapse to a
/// point at ℏ_η=2π (spread ≤ 1e−10); J=30.5 stays spread (≥ 0.1).
/// Runtime < 10 s.
#[test]
fn criterion_02_collapse_law() {
    let _guard = serial();
    let t0 = Instant::now();
    let mut detail = String::new();
    let mut passed = true;
    for two_j in [4u32, 20, 40, 60] {
        let p = ModelParams::new(two_j, 1.0, TAU);
        let assembler = FloquetAssembler::new(&p).unwrap();
        let set = floquet_eigenphases(&assembler, TAU, false).unwrap();
        let spread = circular_spread(&set.phases);
        passed &= spread <= 1e-10;
        detail.push_str(&format!("J={} spread {spread:.2e}; ", two_j as f64 / 2.0));
    }
    let p = ModelParams::new(61, 1.0, TAU);
    let assembler = FloquetAssembler::new(&p).unwrap();
    let spread = circular_spread(&floquet_eigenphases(&assembler, TAU, false).unwrap().phases);
    passed &= spread >= 0.1;
    detail.push_str(&format!("J=30.5 spread {spread:.3}"));
    let elapsed = t0.elapsed();
    passed &= elapsed.as_secs_f64() < 10.0;
    report(2, passed, elapsed, &detail);
}

/// Criterion 3 — 4π periodicity and reflection symmetry: for J ∈ {20, 30.5}
/// and 10 random ℏ_η values each, the spectra at ℏ_η and ℏ_η+4π, and at
/// ℏ_η and 4π−ℏ_η, agree as multisets to 1e−10. Runtime < 30 s.
#[test]
fn criterion_03_periodicity_reflection() {
    let _guard = serial();
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_period = 0.0f64;
    let mut worst_reflect = 0.0f64;
    for two_j in [40u32, 61] {
        let p = ModelParams::new(two_j, 1.0, 0.0);
        let assembler = FloquetAssembler::new(&p).unwrap();
        for _ in 0..10 {
            let h: f64 = rng.gen_range(0.0..HETA_PERIOD);
            let base = floquet_eigenphases(&assembler, h, false).unwrap().phases;
            let shifted = floquet_eigenphases(&assembler, h + HETA_PERIOD, false).unwrap().phases;
            let reflected = floquet_eigenphases(&assembler, HETA_PERIOD - h, false).unwrap().phases;
            worst_period = worst_period.max(multiset_circular_distance(&base, &shifted));
            worst_reflect = worst_reflect.max(multiset_circular_distance(&base, &reflected));
        }
    }
    let elapsed = t0.elapsed();
    let passed = worst_period <= 1e-10 && worst_reflect <= 1e-10 && elapsed.as_secs_f64() < 30.0;
    report(
        3,
        passed,
        elapsed,
        &format!("periodicity dev {worst_period:.2e}, reflection dev {worst_reflect:.2e} (tol 1e-10)"),
    );
}

/// Criterion 4 — phase-cancellation identity: for J ∈ {1,2,3,5} and 20
/// random (α, ℏ_η) draws each, the product of the first three factors of F
/// equals the closed-form exponential to 1e−11. Runtime < 5 s.
#[test]
fn criterion_04_bch_identity() {
    let _guard = serial();
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for two_j in [2u32, 4, 6, 10] {
        for _ in 0..20 {
            let p = ModelParams {
                heta: rng.gen_range(0.0..HETA_PERIOD),
                ..ModelParams::new(two_j, rng.gen_range(0.0..4.0), 0.0)
            };
            let lhs = floquet_first_three(&p).unwrap();
            let rhs = bch_rhs(&p).unwrap();
            worst = worst.max(max_entry_distance(&lhs.matrix, &rhs.matrix));
        }
    }
    let elapsed = t0.elapsed();
    let passed = worst <= 1e-11 && elapsed.as_secs_f64() < 5.0;
    report(4, passed, elapsed, &format!("max entry deviation {worst:.2e} (tol 1e-11)"));
}

/// Criterion 5 — multifractality at J=599, ℏ_η=(√5−1)π/2, αJ=1, per parity
/// sector: D_0 = 1 ± 0.03; D_2(F) ≤ D_2(kicked top) − 0.05; and
/// D_q(F_xy) ≥ D_q(F) − 0.02 for q ∈ {1,2,4}. Runtime < 2 min.
#[test]
fn criterion_05_multifractality() {
    let _guard = serial();
    let t0 = Instant::now();
    let heta = (5.0f64.sqrt() - 1.0) * std::f64::consts::PI / 2.0;
    let p = ModelParams::new(1198, 1.0, heta);
    let assembler = FloquetAssembler::new(&p).unwrap();
    let f_set = floquet_eigenphases(&assembler, heta, false).unwrap();
    let (kt_even_op, kt_odd_op) = assembler.kicked_top_blocks_at(heta).unwrap();
    let kt_even = eigenphases(&kt_even_op, false).unwrap().phases;
    let kt_odd = eigenphases(&kt_odd_op, false).unwrap().phases;

    let pxy = ModelParams { variant: Variant::Xy, ..p.clone() };
    let xy_set = floquet_eigenphases(&FloquetAssembler::new(&pxy).unwrap(), heta, false).unwrap();

    let qs = [0.0, 1.0, 2.0, 4.0];
    let curve = |phases: &[f64]| dq_spectrum(phases, &qs, None).unwrap().d_q;
    let f_even = curve(&f_set.sector_phases(ParityLabel::Even));
    let f_odd = curve(&f_set.sector_phases(ParityLabel::Odd));
    let kt_e = curve(&kt_even);
    let kt_o = curve(&kt_odd);
    let xy = curve(&xy_set.phases);

    let mut passed = true;
    // D_0 = 1 ± 0.03 per sector.
    passed &= (f_even[0] - 1.0).abs() <= 0.03 && (f_odd[0] - 1.0).abs() <= 0.03;
    // D_2(F) ≤ D_2(kicked top) − 0.05 per sector.
    passed &= f_even[2] <= kt_e[2] - 0.05 && f_odd[2] <= kt_o[2] - 0.05;
    // D_q(F_xy) ≥ D_q(F) − 0.02 for q ∈ {1,2,4}, against both sectors.
    for i in 1..4 {
        passed &= xy[i] >= f_even[i] - 0.02 && xy[i] >= f_odd[i] - 0.02;
    }
    let elapsed = t0.elapsed();
    passed &= elapsed.as_secs_f64() < 120.0;
    report(
        5,
        passed,
        elapsed,
        &format!(
            "D0(F)=({:.3},{:.3}); D2: F=({:.3},{:.3}) vs KT=({:.3},{:.3}); D_q(F_xy)=({:.3},{:.3},{:.3}) vs F. (even,odd) order",
            f_even[0], f_odd[0], f_even[2], f_odd[2], kt_e[2], kt_o[2], xy[1], xy[2], xy[3]
        ),
    );
}

/// Criteria 6 and 7 — crossing-count scaling over J = 4…12 at αJ=1:
/// different-parity exponent 3.0 ± 0.3, same-parity exponent 2.7 ± 0.3;
/// and the F_xy control shows no gap minimum below 1e−6 anywhere in
/// [0, 4π), all minima classified avoided. Runtime < 30 min (shared scan).
#[test]
fn criterion_06_07_crossing_scaling_and_xy_floor() {
    let _guard = serial();
    let t0 = Instant::now();
    let cfg = ScanConfig::default();
    let mut diff_points = Vec::new();
    let mut same_points = Vec::new();
    for two_j in (8..=24).step_by(2) {
        let p = ModelParams::new(two_j, 1.0, 0.0);
        let records = find_crossings(&p, SectorSelect::All, (0.0, HETA_PERIOD), &cfg).unwrap();
        let (diff, same) = count_true_crossings(&records);
        diff_points.push((two_j as f64 / 2.0, diff));
        same_points.push((two_j as f64 / 2.0, same));
    }
    let fit_diff = scaling_fit(&diff_points);
    let fit_same = scaling_fit(&same_points);
    let crit6 = (fit_diff.exponent - 3.0).abs() <= 0.3 && (fit_same.exponent - 2.7).abs() <= 0.3;

    // Criterion 7: F_xy gap floor for J ≤ 12.
    let mut min_gap = f64::INFINITY;
    let mut all_avoided = true;
    for two_j in [8u32, 16, 24] {
        let p = ModelParams { variant: Variant::Xy, ..ModelParams::new(two_j, 1.0, 0.0) };
        let records = find_crossings(&p, SectorSelect::All, (0.0, HETA_PERIOD), &cfg).unwrap();
        for r in &records {
            min_gap = min_gap.min(r.gap_bound);
            all_avoided &= r.kind == CrossingKind::Avoided;
        }
    }
    let crit7 = min_gap > 1e-6 && all_avoided;

    let elapsed = t0.elapsed();
    let passed = crit6 && crit7 && elapsed.as_secs_f64() < 1800.0;
    report(
        6,
        crit6 && elapsed.as_secs_f64() < 1800.0,
        elapsed,
        &format!(
            "CDT exponent {:.2}±{:.2} (want 3.0±0.3), same-parity {:.2}±{:.2} (want 2.7±0.3); counts {:?} / {:?}",
            fit_diff.exponent, fit_diff.stderr, fit_same.exponent, fit_same.stderr,
            diff_points.iter().map(|x| x.1).collect::<Vec<_>>(),
            same_points.iter().map(|x| x.1).collect::<Vec<_>>()
        ),
    );
    report(
        7,
        passed,
        elapsed,
        &format!("F_xy minimal refined gap {min_gap:.2e} (> 1e-6), all avoided: {all_avoided}"),
    );
}

/// Criterion 8 — classical decoupling at J=30, α=0.1/3: the quantum spectra
/// at η=0.06π and η=0.06π+120π coincide (Δℏ_η = 4π) while the classical
/// occupied-cell fractions differ by > 0.3; Lyapunov estimates separate the
/// regular (η=5) and chaotic (η=100) regimes at α=0.05. Runtime < 1 min.
#[test]
fn criterion_08_classical_decoupling() {
    let _guard = serial();
    let t0 = Instant::now();
    let alpha = 0.1 / 3.0;
    let j = 30.0;
    let eta_a = 0.06 * std::f64::consts::PI;
    let eta_b = eta_a + 120.0 * std::f64::consts::PI;

    let p = ModelParams::new(60, alpha * j, eta_a / j);
    let assembler = FloquetAssembler::new(&p).unwrap();
    let spec_a = floquet_eigenphases(&assembler, eta_a / j, false).unwrap().phases;
    let spec_b = floquet_eigenphases(&assembler, eta_b / j, false).unwrap().phases;
    let spectral_dist = multiset_circular_distance(&spec_a, &spec_b);

    let seeds = random_seeds(10, 8);
    let frac = |eta: f64| {
        let cp = ClassicalParams::new(alpha, eta);
        let clouds = poincare_section(&seeds, &cp, Variant::Xx, 10_000);
        let pts: Vec<(f64, f64)> = clouds.iter().flat_map(|c| section_points(c)).collect();
        occupied_cell_fraction(&pts, 50)
    };
    let frac_a = frac(eta_a);
    let frac_b = frac(eta_b);

    let lyap = |eta: f64| {
        random_seeds(10, 9)
            .into_iter()
            .map(|s| lyapunov_estimate(s, &ClassicalParams::new(0.05, eta), Variant::Xx, 10_000))
            .fold(f64::MIN, f64::max)
    };
    let l_regular = lyap(5.0);
    let l_chaotic = lyap(100.0);

    let elapsed = t0.elapsed();
    let passed = spectral_dist <= 1e-10
        && (frac_a - frac_b).abs() > 0.3
        && l_regular < 0.01
        && l_chaotic > 0.1
        && elapsed.as_secs_f64() < 60.0;
    report(
        8,
        passed,
        elapsed,
        &format!(
            "spectral dist {spectral_dist:.2e} (≤1e-10); fractions {frac_a:.3} vs {frac_b:.3} (Δ>{:.3}); λ_reg {l_regular:.4} < 0.01, λ_chaos {l_chaotic:.3} > 0.1",
            (frac_a - frac_b).abs()
        ),
    );
}

/// Criterion 9 — FFT retrieval at J=20, αJ=1, φ₀=|m=10⟩: every detected
/// peak at N=256 lies within 2π/256 of an eigenphase with weight
/// > 10/41²; the peak-position error decreases monotonically over
/// N ∈ {32…1024}; spectral resynthesis matches a_n to 1e−9. Runtime < 10 s.
#[test]
fn criterion_09_fft_retrieval() {
    let _guard = serial();
    let t0 = Instant::now();
    let p = ModelParams::new(40, 1.0, 1.0);
    let assembler = FloquetAssembler::new(&p).unwrap();
    let f = assembler.operator_at(p.heta);
    let dim = 41;
    let m0_index = 30; // m = +10
    let phi0 = CVec::from_fn(dim, |i, _| {
        if i == m0_index {
            num_complex::Complex64::new(1.0, 0.0)
        } else {
            num_complex::Complex64::new(0.0, 0.0)
        }
    });

    let weights = overlap_weights(&f, &phi0).unwrap();
    let weight_floor = 10.0 / (41.0 * 41.0);
    let heavy: Vec<f64> = weights.iter().filter(|(_, w)| *w > weight_floor).map(|(e, _)| *e).collect();

    let seq = autocorrelation(&f, &phi0, 1024, "|m=10⟩");

    // Peak alignment at N = 256.
    let seq256 = su2_butterfly::dynamics::AutocorrelationSequence {
        values: seq.values[..256].to_vec(),
        initial_state_tag: seq.initial_state_tag.clone(),
        norm_drift: seq.norm_drift,
    };
    let ps = fft_spectrum(&seq256, FftOptions::default()).unwrap();
    let peaks = detect_peaks(&ps, 3.0);
    let tol = TAU / 256.0;
    let peaks_aligned = !peaks.is_empty()
        && peaks.iter().all(|&k| {
            heavy.iter().any(|&e| circular_distance(ps.phases[k], e) <= tol)
        });

    // Monotonic decrease of the mean peak-position error with N.
    let mut errors = Vec::new();
    for n in [32usize, 64, 128, 256, 512, 1024] {
        let sub = su2_butterfly::dynamics::AutocorrelationSequence {
            values: seq.values[..n].to_vec(),
            initial_state_tag: seq.initial_state_tag.clone(),
            norm_drift: seq.norm_drift,
        };
        let ps = fft_spectrum(&sub, FftOptions::default()).unwrap();
        let peaks = detect_peaks(&ps, 3.0);
        assert!(!peaks.is_empty(), "no peaks detected at N={n}");
        let mean_err: f64 = peaks
            .iter()
            .map(|&k| {
                weights
                    .iter()
                    .map(|&(e, _)| circular_distance(ps.phases[k], e))
                    .fold(f64::INFINITY, f64::min)
            })
            .sum::<f64>()
            / peaks.len() as f64;
        errors.push(mean_err);
    }
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);

    // Spectral resynthesis.
    let model = resynthesize(&weights, 1024);
    let resynth_err = seq
        .values
        .iter()
        .zip(&model)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);

    let elapsed = t0.elapsed();
    let passed = peaks_aligned && monotone && resynth_err <= 1e-9 && elapsed.as_secs_f64() < 10.0;
    report(
        9,
        passed,
        elapsed,
        &format!(
            "peaks aligned {peaks_aligned} ({} peaks at N=256); errors {:?} monotone {monotone}; resynthesis {resynth_err:.2e} (≤1e-9)",
            peaks.len(),
            errors.iter().map(|e| format!("{e:.4}")).collect::<Vec<_>>()
        ),
    );
}

/// Criterion 10 — determinism and I/O: identical runs render byte-identical
/// datasets; write/read round trips preserve every field; interrupted
/// writes leave no partial artifact. Runtime < 5 s.
#[test]
fn criterion_10_determinism_io() {
    let _guard = serial();
    let t0 = Instant::now();
    let p = ModelParams::new(16, 1.0, 0.0);
    let grid: Vec<f64> = (0..32).map(|k| k as f64 * HETA_PERIOD / 32.0).collect();

    let run = || {
        let ds = su2_butterfly::spectrum::butterfly_scan(&p, &grid, false).unwrap();
        let typed = TypedDataset {
            meta: DatasetMeta::new("butterfly", serde_json::to_value(&p).unwrap(), 0),
            rows: su2_butterfly::io::butterfly_rows(&ds),
        };
        render_tsv(&typed)
    };
    let bytes_a = run();
    let bytes_b = run();
    let deterministic = bytes_a == bytes_b;

    let parsed: TypedDataset<ButterflyRow> = parse_tsv(&bytes_a).unwrap();
    let round_trip = render_tsv(&parsed) == bytes_a;

    // Interrupted write: a failing target directory must leave nothing.
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("no-such-dir").join("out.tsv");
    let failed = su2_butterfly::io::atomic_write(&missing, &bytes_a).is_err();
    let no_artifact = !missing.exists();
    let leftovers = std::fs::read_dir(dir.path()).unwrap().count() == 0;

    let elapsed = t0.elapsed();
    let passed =
        deterministic && round_trip && failed && no_artifact && leftovers && elapsed.as_secs_f64() < 5.0;
    report(
        10,
        passed,
        elapsed,
        &format!(
            "byte-identical {deterministic}; round trip {round_trip}; interrupted write clean {}",
            failed && no_artifact && leftovers
        ),
    );
}
