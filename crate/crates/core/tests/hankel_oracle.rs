use dirac_lap::special::{hankel1_0, hankel1_1};
use dirac_lap::C64;

fn oracle() -> Vec<(f64, C64, C64)> {
    let text = include_str!("data/hankel_oracle.csv");
    text.lines()
        .skip(1)
        .map(|line| {
            let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
            (v[0], C64::new(v[1], v[2]), C64::new(v[3], v[4]))
        })
        .collect()
}

#[test]
fn hankel_matches_high_precision_table() {
    let table = oracle();
    assert!(table.len() > 50);
    let mut worst = 0.0f64;
    for (x, h0, h1) in table {
        let e0 = (hankel1_0(x) - h0).norm() / h0.norm();
        let e1 = (hankel1_1(x) - h1).norm() / h1.norm();
        worst = worst.max(e0).max(e1);
        assert!(e0 < 1e-10 && e1 < 1e-10, "x = {x}: rel errors {e0:.2e}, {e1:.2e}");
    }
    eprintln!("worst relative Hankel error {worst:.2e}");
}
