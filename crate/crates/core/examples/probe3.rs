use su2_butterfly::crossings::*;
use su2_butterfly::floquet::ModelParams;

fn main() {
    let p = ModelParams::new(12, 1.0, 0.0);
    let cfg = ScanConfig::default();
    let records = find_crossings(&p, SectorSelect::All, (1.25, 1.27), &cfg).unwrap();
    for r in &records {
        println!("{:+.12} {:?} {:?} ids {:?} gap {:.2e}", r.heta_star, r.kind, r.sector_pair, r.level_ids, r.gap_bound);
    }
    println!("--- near 3.504 ---");
    let records = find_crossings(&p, SectorSelect::All, (3.50, 3.51), &cfg).unwrap();
    for r in &records {
        println!("{:+.12} {:?} {:?} ids {:?} gap {:.2e}", r.heta_star, r.kind, r.sector_pair, r.level_ids, r.gap_bound);
    }
}
