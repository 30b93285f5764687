//! Whole-economy solver contracts: root exactness and utility clearing in
//! convex economies, rationality and gap bookkeeping of the joint optimum,
//! Pareto optimality of bilateral solutions, weight invariance, and the
//! first-order price conditions at interior optima.

use edgeworth::economies::{
    bundled, cobb_douglas_pair, cobb_douglas_pair_price, fenchel_pair, leontief_pair, mixed_pair,
    ticket_traders,
};
use edgeworth::oracle::pareto_improvement_search;
use edgeworth::solver::{
    solve_walrasian_endowment, solve_walrasian_income, solve_yquilibrium,
    solve_yquilibrium_weighted, SolutionKind,
};
use edgeworth::{Economy, Ownership, SolverConfig, Utility};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cobb_douglas_income_pair(m1: f64) -> Economy {
    Economy {
        goods: vec!["x".into(), "y".into()],
        supply: vec![1.0, 1.0],
        utilities: vec![
            Utility::CobbDouglas { exponents: vec![1.0, 0.5] },
            Utility::CobbDouglas { exponents: vec![0.5, 1.0] },
        ],
        ownership: Ownership::Incomes(vec![m1, 1.0 - m1]),
    }
}

fn fenchel_endowment_pair() -> Economy {
    Economy {
        goods: vec!["x".into(), "y".into()],
        supply: vec![1.0, 1.0],
        utilities: vec![Utility::Fenchel, Utility::Fenchel],
        ownership: Ownership::Endowments(vec![vec![0.5, 0.5], vec![0.5, 0.5]]),
    }
}

#[test]
fn walrasian_roots_clear_every_consumer_in_convex_economies() {
    let config = SolverConfig::default();
    for (name, economy) in [
        ("fenchel pair", fenchel_pair()),
        ("leontief pair", leontief_pair()),
        ("cobb-douglas incomes", cobb_douglas_income_pair(0.5)),
    ] {
        let r = solve_walrasian_income(&economy, &config)
            .unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(r.kind, SolutionKind::Walrasian, "{name}");
        assert!(
            r.potential.abs() <= config.tol_solve,
            "{name}: potential {} exceeds the root tolerance",
            r.potential
        );
        let gap_sum: f64 = r.gaps.iter().sum();
        assert!(
            (gap_sum + r.potential).abs() <= 1e-9 * (1.0 + r.potential.abs()),
            "{name}: gaps {:?} do not account for the potential {}",
            r.gaps,
            r.potential
        );
        for (i, g) in r.gaps.iter().enumerate() {
            assert!(*g >= -1e-9, "{name}: consumer {i} beats its own value: gap {g}");
            assert!(*g < 1e-3, "{name}: consumer {i} left value on the table: gap {g}");
        }
        assert!(r.x.is_feasible(&economy.supply, 1e-9), "{name}: allocation over-consumes");
        assert!(r.diagnostics.budget_residual <= 1e-6, "{name}: {:?}", r.diagnostics);
        assert!(r.diagnostics.clearing_residual <= 1e-6, "{name}: {:?}", r.diagnostics);
    }
}

#[test]
fn endowment_walrasian_agrees_with_the_joint_optimum() {
    let config = SolverConfig::default();
    let economy = cobb_douglas_pair([0.3, 0.7]);
    let roots = solve_walrasian_endowment(&economy, &config).expect("roots");
    assert!(!roots.is_empty());
    let fixed_point = &roots[0];
    let expected_p1 = cobb_douglas_pair_price([0.3, 0.7]);
    assert!(
        (fixed_point.p.0[0] - expected_p1).abs() <= 1e-3,
        "price {:?} vs closed form {expected_p1}",
        fixed_point.p
    );
    assert!(fixed_point.diagnostics.fixed_point_residual.unwrap_or(f64::MAX) <= 1e-6);

    // The joint potential maximizer lands on the same equilibrium and
    // recognizes it as one.
    let joint = solve_yquilibrium(&economy, &config).expect("optimum");
    assert_eq!(joint.kind, SolutionKind::Walrasian);
    for k in 0..2 {
        assert!(
            (joint.p.0[k] - fixed_point.p.0[k]).abs() <= 1e-3,
            "joint price {:?} vs fixed-point price {:?}",
            joint.p,
            fixed_point.p
        );
    }
    for i in 0..2 {
        for k in 0..2 {
            assert!(
                (joint.x.0[i][k] - fixed_point.x.0[i][k]).abs() <= 1e-3,
                "joint x {:?} vs fixed-point x {:?}",
                joint.x,
                fixed_point.x
            );
        }
    }
}

#[test]
fn joint_optima_are_rational_feasible_and_gap_consistent() {
    let config = SolverConfig::default();
    // The joint solver measures outcomes against standing pat, so it only
    // accepts endowment economies.
    let mut cases: Vec<(&str, Economy)> =
        bundled().into_iter().filter(|(_, e)| e.endowments().is_some()).collect();
    cases.push(("mixed scarce pair", mixed_pair([0.7, 0.6])));
    assert!(cases.len() >= 5, "expected several endowment economies to exercise");
    for (name, economy) in cases {
        let r = solve_yquilibrium(&economy, &config).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(r.potential <= 1e-9, "{name}: positive potential {}", r.potential);
        let gap_sum: f64 = r.gaps.iter().sum();
        assert!(
            (gap_sum + r.potential).abs() <= 1e-9 * (1.0 + r.potential.abs()),
            "{name}: gaps {:?} vs potential {}",
            r.gaps,
            r.potential
        );
        for (i, g) in r.gaps.iter().enumerate() {
            assert!(*g >= -1e-9, "{name}: consumer {i} beats its own value: gap {g}");
        }
        assert!(r.x.is_feasible(&economy.supply, 1e-9), "{name}: infeasible allocation");
        assert!(r.diagnostics.budget_residual <= 1e-6, "{name}: {:?}", r.diagnostics);
        if let Some(omega) = economy.endowments() {
            for i in 0..economy.n() {
                let autarky = economy.utility(i, &omega[i]);
                assert!(
                    r.utilities[i] >= autarky - 1e-9,
                    "{name}: consumer {i} would rather keep its endowment \
                     ({} < {autarky})",
                    r.utilities[i]
                );
            }
        }
    }
}

#[test]
fn fine_grids_find_no_pareto_improvement_on_bilateral_optima() {
    let config = SolverConfig::default();
    for (name, economy) in [
        ("cobb-douglas pair", cobb_douglas_pair([0.3, 0.7])),
        ("mixed pair", mixed_pair([0.5, 0.5])),
        ("mixed scarce pair", mixed_pair([0.7, 0.6])),
        ("ticket traders", ticket_traders()),
    ] {
        let r = solve_yquilibrium(&economy, &config).unwrap_or_else(|e| panic!("{name}: {e}"));
        let witness = pareto_improvement_search(&economy, &r.x, 200, false, 1e-3)
            .unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(
            witness.is_none(),
            "{name}: solution improvable, witness {:?}",
            witness
        );
    }
}

#[test]
fn positive_weights_do_not_move_the_optimum_in_convex_economies() {
    let config = SolverConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(97);

    // Strictly convex preferences: the optimum is a single point, so price
    // and allocation must both be weight-invariant.
    {
        let economy = cobb_douglas_pair([0.3, 0.7]);
        let base = solve_yquilibrium(&economy, &config).expect("optimum");
        for _ in 0..2 {
            let alpha: Vec<f64> =
                (0..economy.n()).map(|_| rng.random_range(0.25..4.0)).collect();
            let r = solve_yquilibrium_weighted(&economy, &alpha, &config)
                .unwrap_or_else(|e| panic!("weights {alpha:?}: {e}"));
            for k in 0..economy.k() {
                assert!(
                    (r.p.0[k] - base.p.0[k]).abs() <= 1e-3,
                    "weights {alpha:?} moved the price from {:?} to {:?}",
                    base.p,
                    r.p
                );
            }
            for i in 0..economy.n() {
                for k in 0..economy.k() {
                    assert!(
                        (r.x.0[i][k] - base.x.0[i][k]).abs() <= 1e-3,
                        "weights {alpha:?} moved the allocation from {:?} to {:?}",
                        base.x,
                        r.x
                    );
                }
            }
        }
    }

    // Flat optimum: the fenchel diagonal's optimal allocations form a whole
    // segment (the mutual-indifference line), so the invariant object is the
    // set — the price, the utility profile, and membership of the segment.
    {
        let economy = fenchel_endowment_pair();
        let base = solve_yquilibrium(&economy, &config).expect("optimum");
        let c = (1.0 + 3f64.sqrt()) / 2.0;
        for _ in 0..2 {
            let alpha: Vec<f64> =
                (0..economy.n()).map(|_| rng.random_range(0.25..4.0)).collect();
            let r = solve_yquilibrium_weighted(&economy, &alpha, &config)
                .unwrap_or_else(|e| panic!("weights {alpha:?}: {e}"));
            for k in 0..economy.k() {
                assert!(
                    (r.p.0[k] - base.p.0[k]).abs() <= 1e-3,
                    "weights {alpha:?} moved the price from {:?} to {:?}",
                    base.p,
                    r.p
                );
            }
            for i in 0..economy.n() {
                assert!(
                    (r.utilities[i] - c).abs() <= 1e-6,
                    "weights {alpha:?}: utilities {:?} left the optimal profile",
                    r.utilities
                );
            }
            let x1 = &r.x.0[0];
            assert!(
                (x1[1] - (c * c - 2.0 * c * x1[0])).abs() <= 1e-6,
                "weights {alpha:?}: allocation {x1:?} left the optimal segment"
            );
        }
    }
}

#[test]
fn interior_optima_equalize_marginal_rates_to_the_price_ratio() {
    let config = SolverConfig::default();
    let income = cobb_douglas_income_pair(0.5);
    let income_result = solve_walrasian_income(&income, &config).expect("root");
    let endowment = cobb_douglas_pair([0.3, 0.8]);
    let endowment_result = &solve_walrasian_endowment(&endowment, &config).expect("roots")[0];

    for (name, economy, r) in [
        ("incomes", &income, &income_result),
        ("endowments", &endowment, endowment_result),
    ] {
        let ratio = r.p.0[0] / r.p.0[1];
        for i in 0..economy.n() {
            let x = &r.x.0[i];
            assert!(
                x.iter().all(|v| *v > 1e-3),
                "{name}: consumer {i} is not interior: {x:?}"
            );
            let partial = |k: usize| {
                let h = 1e-6 * (1.0 + x[k].abs());
                let mut hi = x.clone();
                hi[k] += h;
                let mut lo = x.clone();
                lo[k] -= h;
                (economy.utility(i, &hi) - economy.utility(i, &lo)) / (2.0 * h)
            };
            let mrs = partial(0) / partial(1);
            assert!(
                (mrs - ratio).abs() <= 1e-2 * (1.0 + ratio.abs()),
                "{name}: consumer {i} trades at rate {mrs} against prices {ratio}"
            );
        }
    }
}
