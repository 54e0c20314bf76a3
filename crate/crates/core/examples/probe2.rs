// Compare independent crossing locations vs detector records at J=6.
use su2_butterfly::crossings::*;
use su2_butterfly::floquet::{FloquetAssembler, ModelParams};
use su2_butterfly::linalg::wrapped_difference;
use su2_butterfly::spectrum::eigenphases;
use num_complex::Complex64;
use nalgebra::DMatrix;
type CMat = DMatrix<Complex64>;

fn greedy_match(prev: &CMat, cur: &CMat) -> Vec<usize> {
    let n = prev.ncols();
    let mut used = vec![false; n];
    let mut assign = vec![0usize; n];
    for i in 0..n {
        let mut best = (0usize, -1.0f64);
        for j in 0..n {
            if used[j] { continue; }
            let mut s = Complex64::new(0.0, 0.0);
            for r in 0..prev.nrows() { s += prev[(r, i)].conj() * cur[(r, j)]; }
            let o = s.norm();
            if o > best.1 { best = (j, o); }
        }
        used[best.0] = true;
        assign[i] = best.0;
    }
    assign
}

fn main() {
    let two_j = 12u32;
    let p = ModelParams::new(two_j, 1.0, 0.0);
    let asm = FloquetAssembler::new(&p).unwrap();
    // Independent: dense scan of [1e-4, 2pi - 1e-4]
    let n_pts = 26_000usize;
    let (a, b) = (1e-4, std::f64::consts::TAU - 1e-4);
    let h = (b - a) / n_pts as f64;
    let (be, bo) = asm.block_operators_at(a).unwrap();
    let se = eigenphases(&be, true).unwrap();
    let so = eigenphases(&bo, true).unwrap();
    let (mut pe, mut ve) = (se.phases.clone(), se.vectors.unwrap());
    let (mut po, mut vo) = (so.phases.clone(), so.vectors.unwrap());
    let ne = pe.len(); let no = po.len();
    let mut locs: Vec<f64> = Vec::new();
    for k in 1..=n_pts {
        let t = a + k as f64 * h;
        let (be, bo) = asm.block_operators_at(t).unwrap();
        let s_e = eigenphases(&be, true).unwrap();
        let s_o = eigenphases(&bo, true).unwrap();
        let v_e = s_e.vectors.unwrap();
        let v_o = s_o.vectors.unwrap();
        let ae = greedy_match(&ve, &v_e);
        let ao = greedy_match(&vo, &v_o);
        let new_pe: Vec<f64> = (0..ne).map(|i| s_e.phases[ae[i]]).collect();
        let new_po: Vec<f64> = (0..no).map(|i| s_o.phases[ao[i]]).collect();
        for i in 0..ne {
            for j2 in 0..no {
                let d0 = wrapped_difference(pe[i], po[j2]);
                let d1 = wrapped_difference(new_pe[i], new_po[j2]);
                if d0.signum() != d1.signum() && d0.abs() < 1.0 && d1.abs() < 1.0 {
                    locs.push(t - h + h * d0.abs() / (d0.abs() + d1.abs()));
                }
            }
        }
        pe = new_pe; po = new_po;
        let mut nve = ve.clone(); let mut nvo = vo.clone();
        for i in 0..ne { nve.set_column(i, &v_e.column(ae[i])); }
        for i in 0..no { nvo.set_column(i, &v_o.column(ao[i])); }
        ve = nve; vo = nvo;
    }
    locs.sort_by(f64::total_cmp);
    // Detector over same range
    let cfg = ScanConfig::default();
    let records = find_crossings(&p, SectorSelect::Cross, (a, b), &cfg).unwrap();
    let det: Vec<f64> = records.iter().filter(|r| r.kind == CrossingKind::DifferentParity).map(|r| r.heta_star).collect();
    let det_avoided: Vec<(f64, f64)> = records.iter().filter(|r| r.kind == CrossingKind::Avoided).map(|r| (r.heta_star, r.gap_bound)).collect();
    println!("independent: {} crossings; detector: {} diff + {} avoided-cross", locs.len(), det.len(), det_avoided.len());
    // which independent locations have no detector record within 1e-3?
    let mut missed = Vec::new();
    for &l in &locs {
        if !det.iter().any(|&d| (d - l).abs() < 2e-3) {
            missed.push(l);
        }
    }
    println!("missed ({}): {:?}", missed.len(), &missed[..missed.len().min(12)]);
    println!("avoided-cross records: {:?}", &det_avoided[..det_avoided.len().min(8)]);
    // spurious detector records?
    let mut spurious = Vec::new();
    for &d in &det {
        if !locs.iter().any(|&l| (d - l).abs() < 2e-3) { spurious.push(d); }
    }
    println!("spurious ({}): {:?}", spurious.len(), &spurious[..spurious.len().min(8)]);
}
