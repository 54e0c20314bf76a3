// Criterion 6/7 probe: crossing counts and scaling exponents J=4..12.
use std::time::Instant;
use su2_butterfly::crossings::*;
use su2_butterfly::floquet::{ModelParams, Variant};
use su2_butterfly::HETA_PERIOD;

fn main() {
    let cfg = ScanConfig::default();
    let t0 = Instant::now();
    let mut diff_points = Vec::new();
    let mut same_points = Vec::new();
    for j2 in (8..=24).step_by(2) {
        let t = Instant::now();
        let p = ModelParams::new(j2, 1.0, 0.0);
        let records = find_crossings(&p, SectorSelect::All, (0.0, HETA_PERIOD), &cfg).unwrap();
        let (diff, same) = count_true_crossings(&records);
        let avoided = records.iter().filter(|r| r.kind == CrossingKind::Avoided).count();
        let j = j2 as f64 / 2.0;
        let two_pi = std::f64::consts::TAU;
        let lo = records.iter().filter(|r| r.kind == CrossingKind::DifferentParity && r.heta_star < two_pi).count();
        let hi = records.iter().filter(|r| r.kind == CrossingKind::DifferentParity && r.heta_star > two_pi).count();
        println!("J={j}: diff {diff} (halves {lo}/{hi}), same {same}, avoided {avoided} ({:?})", t.elapsed());
        diff_points.push((j, diff));
        same_points.push((j, same));
    }
    let fd = scaling_fit(&diff_points);
    let fs = scaling_fit(&same_points);
    println!("different-parity exponent: {:.3} ± {:.3}", fd.exponent, fd.stderr);
    println!("same-parity exponent: {:.3} ± {:.3}", fs.exponent, fs.stderr);
    println!("scan total {:?}", t0.elapsed());

    let t = Instant::now();
    for j2 in [8u32, 16, 24] {
        let p = ModelParams { variant: Variant::Xy, ..ModelParams::new(j2, 1.0, 0.0) };
        let records = find_crossings(&p, SectorSelect::All, (0.0, HETA_PERIOD), &cfg).unwrap();
        let min_gap = records.iter().map(|r| r.gap_bound).fold(f64::INFINITY, f64::min);
        let true_count = records.iter().filter(|r| r.kind != CrossingKind::Avoided).count();
        println!("F_xy J={}: {} records, min gap {:.3e}, true {}", j2 as f64/2.0, records.len(), min_gap, true_count);
    }
    println!("xy scan {:?}", t.elapsed());
}
