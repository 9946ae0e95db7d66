//! Deep randomized stress tests; run with `cargo test -- --ignored`.

use tautline::quantile::fit_quantile_ties;
use tautline::*;

fn random_lambda(rng: &mut Rng, n: usize) -> LambdaVector {
    if n >= 2 && rng.uniform() < 0.7 {
        LambdaVector::new(
            (0..n - 1)
                .map(|_| 10f64.powf(rng.uniform_in(-3.0, 1.5)))
                .collect(),
        )
        .unwrap()
    } else {
        LambdaVector::constant(10f64.powf(rng.uniform_in(-3.0, 1.5)), n).unwrap()
    }
}

fn adversarial_responses(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| match rng.below(4) {
            0 => rng.normal() * 3.0,
            1 => {
                if i % 2 == 0 {
                    5.0
                } else {
                    -5.0
                }
            }
            2 => rng.below(3) as f64,
            _ => rng.uniform_in(-1.0, 1.0) + if rng.uniform() < 0.05 { 50.0 } else { 0.0 },
        })
        .collect()
}

#[test]
#[ignore = "deep fuzz; minutes of runtime"]
fn certificates_hold_on_adversarial_instances() {
    let mut rng = Rng::new(987654321);
    for case in 0..20_000u64 {
        let n = 1 + rng.below(40);
        let y = adversarial_responses(&mut rng, n);
        let lam = random_lambda(&mut rng, n);
        match rng.below(4) {
            0 => {
                let m = Quadratic::new(y).unwrap();
                let fit = fit_taut(&m, &lam).unwrap();
                let c = check_optimality_smooth(&m, &lam, &fit.values, 1e-8).unwrap();
                assert!(c.pass, "case {case}: violation {}", c.worst);
            }
            1 => {
                let m = PseudoHuber::new(y, 10f64.powf(rng.uniform_in(-2.0, 0.5))).unwrap();
                let fit = fit_taut(&m, &lam).unwrap();
                let c = check_optimality_smooth(&m, &lam, &fit.values, 1e-6).unwrap();
                assert!(c.pass, "case {case}: violation {}", c.worst);
            }
            2 => {
                let beta = rng.uniform_in(0.02, 0.98);
                let q = fit_quantile(&y, beta, &lam).unwrap();
                let m = QuantileLoss::new(y, beta).unwrap();
                let c = check_optimality(&m, &lam, &q.fit.values, 1e-10);
                assert!(c.pass, "case {case}: violation {}", c.worst);
            }
            _ => {
                let counts: Vec<f64> = y.iter().map(|v| v.abs().round().min(20.0)).collect();
                let lo = counts.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = counts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if lo < hi {
                    let f = fit_expfam(&counts, &lam, Family::Poisson).unwrap();
                    let m = ExpFamily::new(counts, Family::Poisson).unwrap();
                    let c = check_optimality_smooth(&m, &lam, &f.fit.values, 1e-7).unwrap();
                    assert!(c.pass, "case {case}: violation {}", c.worst);
                }
            }
        }
    }
}

#[test]
#[ignore = "deep fuzz; minutes of runtime"]
fn tied_quantile_fits_match_enumeration() {
    let mut rng = Rng::new(13579);
    for case in 0..3000u64 {
        let n = 2 + rng.below(6);
        let x: Vec<f64> = (0..n).map(|_| rng.below(3) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
        let data = DataSet::new(x, y).unwrap();
        let m = data.blocks();
        let beta = [0.1, 0.25, 0.5, 0.75, 0.9][rng.below(5)];
        let lam = LambdaVector::constant(0.02 + rng.uniform(), m).unwrap();
        let (qf, expanded) = fit_quantile_ties(&data, beta, &lam).unwrap();
        for b in 0..m {
            let (lo, hi) = data.block_range(b);
            for i in lo..hi {
                assert_eq!(expanded[i], qf.fit.values[b]);
            }
        }

        let mut grid = data.y().to_vec();
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        grid.dedup();
        let k = grid.len();
        let mut idx = vec![0usize; m];
        let mut best = f64::INFINITY;
        'outer: loop {
            let mut t = 0.0;
            for b in 0..m {
                let (lo, hi) = data.block_range(b);
                for i in lo..hi {
                    t += QuantileLoss::rho(beta, grid[idx[b]] - data.y()[i]);
                }
            }
            for b in 1..m {
                t += lam.at(b) * (grid[idx[b]] - grid[idx[b - 1]]).abs();
            }
            best = best.min(t);
            let mut pos = 0;
            loop {
                if pos == m {
                    break 'outer;
                }
                idx[pos] += 1;
                if idx[pos] < k {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
        }
        assert!(
            (qf.fit.objective - best).abs() < 1e-10,
            "case {case}: objective {} vs enumeration {best}",
            qf.fit.objective
        );
    }
}

#[test]
#[ignore = "deep fuzz; minutes of runtime"]
fn tied_design_fits_certify() {
    let mut rng = Rng::new(24680);
    for case in 0..5000u64 {
        let n = 2 + rng.below(30);
        let x: Vec<f64> = (0..n).map(|_| rng.below(8) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.normal() * 2.0).collect();
        let data = DataSet::new(x, y).unwrap();
        let m = data.blocks();
        let lam = random_lambda(&mut rng, m);
        let model = Quadratic::new(data.y().to_vec()).unwrap();
        let (fit, _) = fit_taut_ties(&model, &data, &lam).unwrap();
        let blocked = Blocked::new(&model, data.block_ends()).unwrap();
        let c = check_optimality_smooth(&blocked, &lam, &fit.values, 1e-8).unwrap();
        assert!(c.pass, "case {case}: violation {}", c.worst);
    }
}
