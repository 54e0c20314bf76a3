use su2_butterfly::floquet::{FloquetAssembler, ModelParams};
use su2_butterfly::spectrum::{floquet_eigenphases, ParityLabel};
use std::time::Instant;

const TAU: f64 = std::f64::consts::TAU;

fn band_map(phases: &[f64]) -> Vec<f64> {
    let mut s: Vec<f64> = phases.iter().map(|p| p.rem_euclid(TAU)).collect();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let mut big = (TAU - s[n-1] + s[0], s[n-1]);
    for w in s.windows(2) { if w[1]-w[0] > big.0 { big = (w[1]-w[0], w[0]); } }
    let lo = (big.1 + big.0).rem_euclid(TAU);
    let band = TAU - big.0;
    s.iter().map(|&p| ((p - lo).rem_euclid(TAU)) / band * TAU).collect()
}
fn hist(phases: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let mut c = vec![0usize; bins];
    let w = (hi - lo) / bins as f64;
    for &p in phases { if p >= lo && p < hi { c[(((p-lo)/w) as usize).min(bins-1)] += 1; } }
    let t: usize = c.iter().sum::<usize>().max(1);
    c.iter().map(|&x| x as f64 / t as f64).collect()
}
fn corr(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>()/n; let mb = b.iter().sum::<f64>()/n;
    let (mut sxy, mut sxx, mut syy) = (0.0,0.0,0.0);
    for (x,y) in a.iter().zip(b) { sxy += (x-ma)*(y-mb); sxx += (x-ma)*(x-ma); syy += (y-mb)*(y-mb); }
    if sxx==0.0||syy==0.0 { return 0.0; }
    sxy/(sxx*syy).sqrt()
}
fn main() {
    let t0 = Instant::now();
    let heta = (5.0f64.sqrt() - 1.0) * std::f64::consts::PI / 2.0;
    let p = ModelParams::new(5998, 1.0, heta); // J = 2999
    let asm = FloquetAssembler::new(&p).unwrap();
    eprintln!("assembler: {:?}", t0.elapsed());
    let set = floquet_eigenphases(&asm, heta, false).unwrap();
    eprintln!("diagonalized: {:?} residual {:.2e}", t0.elapsed(), set.residual);
    let odd = set.sector_phases(ParityLabel::Odd);
    // gap statistics
    let mut s = odd.clone(); s.sort_by(f64::total_cmp);
    let n = s.len();
    let mut gaps: Vec<f64> = s.windows(2).map(|w| w[1]-w[0]).collect();
    gaps.push(TAU - s[n-1] + s[0]);
    gaps.sort_by(|a,b| b.total_cmp(a));
    let band = TAU - gaps[0];
    println!("J=2999 odd: n={n} band={band:.4} interior max gap={:.6} mean={:.6} ratio={:.2}",
             gaps[1], band/(n as f64-1.0), gaps[1]/(band/(n as f64-1.0)));
    let u = band_map(&odd);
    let qs = [0.0, 1.0, 2.0, 4.0];
    let c = su2_butterfly::fractal::dq_spectrum(&u, &qs, None).unwrap();
    println!("J=2999 odd band D: D0={:.4} D1={:.4} D2={:.4} D4={:.4}", c.d_q[0], c.d_q[1], c.d_q[2], c.d_q[3]);
    for ratio in [8.0f64] {
        for bins in [16usize, 24, 32] {
            let c0 = 0.5 * TAU;
            let h1 = hist(&u, 0.0, TAU, bins);
            let h2 = hist(&u, c0 - TAU/ratio/2.0, c0 + TAU/ratio/2.0, bins);
            let h3 = hist(&u, c0 - TAU/ratio/ratio/2.0, c0 + TAU/ratio/ratio/2.0, bins);
            println!("J=2999 1:8:64 bins={bins}: corr12={:.3} corr23={:.3}", corr(&h1,&h2), corr(&h2,&h3));
        }
    }
    println!("total {:?}", t0.elapsed());
}
