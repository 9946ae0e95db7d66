//! Randomized invariants of the solvers and models.

use proptest::prelude::*;
use tautline::*;

fn small_vec() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, 1..16)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Any vector whatsoever costs at least as much as the fit.
    #[test]
    fn fit_is_a_global_minimizer(y in small_vec(), probe in small_vec(), lam in 0.01f64..3.0) {
        let n = y.len();
        let m = Quadratic::new(y).unwrap();
        let lambda = LambdaVector::constant(lam, n).unwrap();
        let fit = fit_taut(&m, &lambda).unwrap();
        let mut v: Vec<f64> = probe.into_iter().cycle().take(n).collect();
        // include a nearby probe as well
        for (i, x) in v.iter_mut().enumerate() {
            if i % 2 == 0 {
                *x = fit.values[i] + (*x) * 1e-3;
            }
        }
        prop_assert!(objective(&m, &lambda, &v) >= fit.objective - 1e-9);
        prop_assert!(tube_feasible(&m, &lambda, &fit.values));
    }

    /// Rank vectors always satisfy the tie-bracketing bounds.
    #[test]
    fn rank_vector_is_a_compliant_permutation(y in prop::collection::vec(-3i32..3, 1..30)) {
        let y: Vec<f64> = y.into_iter().map(f64::from).collect();
        let z = rank_vector(&y);
        let n = y.len();
        let mut seen = vec![false; n + 1];
        for j in 0..n {
            let r = z[j] as usize;
            prop_assert!(r >= 1 && r <= n && !seen[r]);
            seen[r] = true;
            let below = y.iter().filter(|&&v| v < y[j]).count();
            let at_or_below = y.iter().filter(|&&v| v <= y[j]).count();
            prop_assert!(r >= below + 1 && r <= at_or_below);
        }
    }

    /// One-sided derivatives are ordered and nondecreasing for every model.
    #[test]
    fn derivatives_are_monotone(y in small_vec(), beta in 0.05f64..0.95, z1 in -20.0f64..20.0, z2 in -20.0f64..20.0) {
        let (lo, hi) = if z1 <= z2 { (z1, z2) } else { (z2, z1) };
        let models: Vec<Box<dyn LossModel>> = vec![
            Box::new(Quadratic::new(y.clone()).unwrap()),
            Box::new(PseudoHuber::new(y.clone(), 0.2).unwrap()),
            Box::new(QuantileLoss::new(y.clone(), beta).unwrap()),
            Box::new(Smoothed::new(QuantileLoss::new(y.clone(), beta).unwrap(), 0.05).unwrap()),
        ];
        for m in &models {
            for i in 0..m.len() {
                prop_assert!(m.left_deriv(i, lo) <= m.right_deriv(i, lo) + 1e-12);
                prop_assert!(m.right_deriv(i, lo) <= m.right_deriv(i, hi) + 1e-12);
                prop_assert!(m.left_deriv(i, lo) <= m.left_deriv(i, hi) + 1e-12);
            }
        }
    }

    /// Extreme-segment counting only sees the order structure.
    #[test]
    fn extrema_invariant_under_monotone_maps(f in prop::collection::vec(-5.0f64..5.0, 2..20)) {
        let a = count_extrema(&f, 1e-12);
        let g: Vec<f64> = f.iter().map(|v| v.exp() + 0.5 * v).collect();
        let b = count_extrema(&g, 1e-12);
        prop_assert_eq!(a.total(), b.total());
        prop_assert_eq!(a.interior(), b.interior());
        prop_assert_eq!(a.maxima(), b.maxima());
    }

    /// Pooled inverses bracket the target level from both sides.
    #[test]
    fn inverses_bracket_their_level(y in small_vec(), t in -5.0f64..5.0) {
        let m = PseudoHuber::new(y, 0.3).unwrap();
        let n = m.len();
        let lo = m.lower_inverse(0, n - 1, t).unwrap();
        let hi = m.upper_inverse(0, n - 1, t).unwrap();
        prop_assert!(lo <= hi + 1e-9);
        // the derivative passes through t between the two inverses
        prop_assert!(m.pooled_right(0, n - 1, lo - 1e-6) <= t + 1e-6);
        prop_assert!(m.pooled_right(0, n - 1, hi + 1e-6) >= t - 1e-6);
    }
}
