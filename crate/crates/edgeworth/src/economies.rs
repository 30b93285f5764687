//! Ready-made example economies.
//!
//! These small economies have known closed-form equilibria (or known
//! non-existence results), which makes them the reference fixtures for the
//! solvers, the brute-force oracle and the CLI demos. Each constructor
//! documents what is known about its solution so tests can pin exact values.

use crate::economy::{Economy, Ownership, Utility};

/// Two identical consumers with the utility `x + √(y + x²)` — quasiconcave
/// (its indifference curves are straight, non-parallel lines) yet admitting
/// no concave transformation — and equal incomes, one unit of each good.
///
/// Despite each consumer's preference for extremes, the economy has a
/// Walrasian equilibrium at `p = (√3 − 1, 2 − √3)`: with income 1/2 the whole
/// capped budget segment is indifferent, so any split of it that clears the
/// market works. The equilibrium allocations trace the line
/// `x_2 = 1 + √3/2 − (1 + √3)·x_1` in consumer 1's bundle.
pub fn fenchel_pair() -> Economy {
    fenchel_pair_with_incomes(0.5)
}

/// [`fenchel_pair`] with income shares `(m1, 1 − m1)`.
///
/// A Walrasian equilibrium exists for every `m1` (the utility is
/// quasiconcave), but its shape changes with the income split. Only
/// `m1 = 1/2` yields interior allocations; away from it the equilibrium sits
/// on the supply box boundary. For `m1 ∈ (1/3, 1/2)`, consumer 1 takes the
/// whole supply of good 2 and a *band* of prices clears: its lower end
/// `p = 2√(m1·q)` makes consumer 1's budget line an indifference line, its
/// upper end does the same for consumer 2, and every price in between
/// supports the same kind of corner allocation. For small `m1 ≤ 1/5` the
/// roles flip (consumer 2's budget line is the indifferent one, at
/// `p = 2√((2−m1)(1−m1)) − 2(1−m1)`), and for `m1 ∈ [1/5, 1/3]` consumer 1
/// simply receives all of good 2: `x1 = (0, 1)`.
pub fn fenchel_pair_with_incomes(m1: f64) -> Economy {
    Economy {
        goods: vec!["x".into(), "y".into()],
        supply: vec![1.0, 1.0],
        utilities: vec![Utility::Fenchel, Utility::Fenchel],
        ownership: Ownership::Incomes(vec![m1, 1.0 - m1]),
    }
}

/// Equilibrium price of [`fenchel_pair`]: `(√3 − 1, 2 − √3)`.
pub fn fenchel_pair_price() -> [f64; 2] {
    [3f64.sqrt() - 1.0, 2.0 - 3f64.sqrt()]
}

/// Two identical `min(x, y)` consumers with equal incomes, one unit of each
/// good.
///
/// Both consumers always demand the diagonal bundle `(m_i, m_i)`, so *every*
/// normalized price vector clears the market: the equilibrium allocation is
/// unique but the price is maximally non-unique.
pub fn leontief_pair() -> Economy {
    Economy {
        goods: vec!["x".into(), "y".into()],
        supply: vec![1.0, 1.0],
        utilities: vec![
            Utility::Leontief { requirements: vec![1.0, 1.0] },
            Utility::Leontief { requirements: vec![1.0, 1.0] },
        ],
        ownership: Ownership::Incomes(vec![0.5, 0.5]),
    }
}

/// Two smooth Cobb-Douglas consumers, `u1 = x√y` and `u2 = √x·y`, one unit of
/// each good, endowments `ω1` and `(1,1) − ω1`.
///
/// The unique equilibrium price of good 1 is `(1 + ω12) / (3 − ω11 + ω12)`
/// (good 2 gets the complement), which [`cobb_douglas_pair_price`] computes.
pub fn cobb_douglas_pair(omega1: [f64; 2]) -> Economy {
    Economy {
        goods: vec!["x".into(), "y".into()],
        supply: vec![1.0, 1.0],
        utilities: vec![
            Utility::CobbDouglas { exponents: vec![1.0, 0.5] },
            Utility::CobbDouglas { exponents: vec![0.5, 1.0] },
        ],
        ownership: Ownership::Endowments(vec![
            vec![omega1[0], omega1[1]],
            vec![1.0 - omega1[0], 1.0 - omega1[1]],
        ]),
    }
}

/// Closed-form equilibrium price of good 1 in [`cobb_douglas_pair`].
pub fn cobb_douglas_pair_price(omega1: [f64; 2]) -> f64 {
    (1.0 + omega1[1]) / (3.0 - omega1[0] + omega1[1])
}

/// A smooth Cobb-Douglas consumer (`x^{2/3} y^{1/3}`) trading with a
/// single-minded one (`max(2x, y)`), one unit of each good, endowments `ω1`
/// and `(1,1) − ω1`.
///
/// The second consumer's nonconvex preference splits the endowment square
/// into four regimes with distinct closed-form optima; see
/// [`mixed_pair_reference`]. In regime 1 the optimum is a Walrasian
/// equilibrium (zero potential); in the others no Walrasian equilibrium
/// exists and the optimum is a Yquilibrium with strictly negative potential.
pub fn mixed_pair(omega1: [f64; 2]) -> Economy {
    Economy {
        goods: vec!["x".into(), "y".into()],
        supply: vec![1.0, 1.0],
        utilities: vec![
            Utility::CobbDouglas { exponents: vec![2.0 / 3.0, 1.0 / 3.0] },
            Utility::MaxLinear { coefficients: vec![2.0, 1.0] },
        ],
        ownership: Ownership::Endowments(vec![
            vec![omega1[0], omega1[1]],
            vec![1.0 - omega1[0], 1.0 - omega1[1]],
        ]),
    }
}

/// Closed-form reference solution for [`mixed_pair`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedPairReference {
    /// Which of the four endowment regimes `ω1` falls in (1–4).
    pub regime: u8,
    /// Equilibrium price of good 1 (good 2 has price `1 − p1`).
    pub p1: f64,
    /// Consumer 1's bundle; consumer 2 gets the complement.
    pub x1: [f64; 2],
}

/// Piecewise closed form for the optimum of [`mixed_pair`] as a function of
/// consumer 1's endowment `ω1 ∈ [0,1]²`:
///
/// * regime 1 (`ω11 ≤ 3/4`, `ω12 ≤ 3 − 4ω11`): Walrasian;
///   `p1 = (3 − ω12)/(3 + ω11 − ω12)`, `x1 = (2ω11/(3 − ω12), 1)`.
/// * regime 2 (`ω12 ≤ min((2ω11)⁻², 2 − 2ω11)` above regime 1):
///   `p1 = (2 − 2ω12)/(1 + 2ω11 − 2ω12)`, `x1 = (1/2, 1)`.
/// * regime 3 (`ω11 ≥ (1 + √5)/4`, `2 − 2ω11 ≤ ω12 ≤ (2ω11 − 1)²`):
///   `p1 = 2/3`, `x1 = (ω11 + ω12/2 − 1/2, 1)`.
/// * regime 4 (`ω12 ≥ max((2ω11)⁻², (2ω11 − 1)²)`):
///   `p1 = (1 + √ω12)/(1 + ω11 + √ω12)`, `x1 = (ω11·√ω12, 1)`.
///
/// The regimes tile the square and the prices agree on shared boundaries.
pub fn mixed_pair_reference(omega1: [f64; 2]) -> MixedPairReference {
    let [a, b] = omega1;
    if a <= 0.75 && b <= 3.0 - 4.0 * a {
        let p1 = (3.0 - b) / (3.0 + a - b);
        return MixedPairReference { regime: 1, p1, x1: [2.0 * a / (3.0 - b), 1.0] };
    }
    let inv_sq = 1.0 / (4.0 * a * a);
    let kink_sq = (2.0 * a - 1.0) * (2.0 * a - 1.0);
    if b >= inv_sq.max(kink_sq) {
        let r = b.sqrt();
        let p1 = (1.0 + r) / (1.0 + a + r);
        return MixedPairReference { regime: 4, p1, x1: [a * r, 1.0] };
    }
    if a >= (1.0 + 5f64.sqrt()) / 4.0 && b >= 2.0 - 2.0 * a && b <= kink_sq {
        return MixedPairReference { regime: 3, p1: 2.0 / 3.0, x1: [a + b / 2.0 - 0.5, 1.0] };
    }
    let p1 = (2.0 - 2.0 * b) / (1.0 + 2.0 * a - 2.0 * b);
    MixedPairReference { regime: 2, p1, x1: [0.5, 1.0] }
}

/// Three single-minded consumers: `max(2x, y)` endowed with `(0.1, 0.1)`,
/// `max(x, 2y)` endowed with `(0.8, 0.1)`, and `min(x, y)` endowed with
/// `(0.1, 0.8)`.
///
/// Every Pareto-optimal core allocation here needs the first two consumers'
/// implied price ratios to overlap, and they never do — so no Walrasian
/// equilibrium exists, and even no linear price supports the classical
/// contract curve. The Yquilibrium trades along a different one-parameter
/// family that *is* consistent with linear prices.
pub fn single_minded_trio() -> Economy {
    Economy {
        goods: vec!["x".into(), "y".into()],
        supply: vec![1.0, 1.0],
        utilities: vec![
            Utility::MaxLinear { coefficients: vec![2.0, 1.0] },
            Utility::MaxLinear { coefficients: vec![1.0, 2.0] },
            Utility::Leontief { requirements: vec![1.0, 1.0] },
        ],
        ownership: Ownership::Endowments(vec![
            vec![0.1, 0.1],
            vec![0.8, 0.1],
            vec![0.1, 0.8],
        ]),
    }
}

/// Two collectors of interchangeable tickets, both with `u = max(x, y)`:
/// one holds two of each kind, the other one of each.
///
/// Mixing kinds is pointless, so the only undominated trades concentrate
/// each consumer on a single kind: the large holder ends with three tickets
/// of one kind and the small holder three of the other, a strict Pareto
/// improvement on standing pat that no linear price supported by classical
/// demand would produce.
pub fn ticket_traders() -> Economy {
    Economy {
        goods: vec!["red".into(), "blue".into()],
        supply: vec![3.0, 3.0],
        utilities: vec![
            Utility::MaxLinear { coefficients: vec![1.0, 1.0] },
            Utility::MaxLinear { coefficients: vec![1.0, 1.0] },
        ],
        ownership: Ownership::Endowments(vec![vec![2.0, 2.0], vec![1.0, 1.0]]),
    }
}

/// The six bundled economies by name, with default parameters.
pub fn bundled() -> Vec<(&'static str, Economy)> {
    vec![
        ("fenchel", fenchel_pair()),
        ("leontief", leontief_pair()),
        ("cobb-douglas", cobb_douglas_pair([0.5, 0.5])),
        ("mixed", mixed_pair([0.5, 0.5])),
        ("trio", single_minded_trio()),
        ("tickets", ticket_traders()),
    ]
}
