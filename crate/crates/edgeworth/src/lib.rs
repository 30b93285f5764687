//! Equilibria of small exchange economies by potential maximization.
//!
//! The crate models pure exchange: `K` goods in fixed supply, `N` consumers
//! with (possibly non-concave) utilities, and purchasing power given either
//! as income shares or as endowments. Everything revolves around a single
//! scalar diagnostic, the *potential*: at prices `p` and a budget-exact
//! feasible allocation `x`, the sum over consumers of `u_i(x_i) − v̄_i(p, m_i)`,
//! where `v̄` is the box-restricted indirect utility. The potential is never
//! positive, and it hits zero exactly at the capped market-clearing
//! equilibria — so root-finding becomes maximization, which still makes
//! sense when no equilibrium exists:
//!
//! * **walrasian**: maximize the potential over prices and report a root,
//!   or fail with the best incumbent when the maximum stays below zero.
//! * **yquilibrium**: maximize the potential over prices *and* allocations,
//!   restricted to individually rational, undominated allocations; the
//!   maximizer is a well-defined stand-in for equilibrium in non-convex
//!   economies, and coincides with a Walrasian equilibrium when one exists.
//! * **dual-negishi**: for smooth income economies, iterate welfare weights
//!   `α_i = 1/(∂v_i/∂m_i)` against the price minimization of the weighted
//!   indirect welfare `Σ α_i v_i(p, m_i)`, a dual route to the same prices.
//!
//! [`economy`] holds the core types, [`duality`] the indirect-utility
//! machinery and quasiconcave envelopes, [`prices`] the price-simplex
//! geometry, [`solver`] the production solvers, [`oracle`] slow exhaustive
//! reference implementations used to cross-check the solvers, and
//! [`economies`] a set of bundled example economies.

pub mod duality;
pub mod economies;
pub mod economy;
pub mod oracle;
pub mod prices;
pub mod solver;

pub use economy::{
    Allocation, Bundle, Economy, EconomyError, IncomeDistribution, Ownership, PriceVector,
    SolverConfig, Utility,
};

/// The library's own version, for embedding in machine-readable reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Which solution concept to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Prices at which every consumer can afford an optimal bundle and
    /// markets clear (up to the supply caps).
    Walrasian,
    /// The potential-maximizing price/allocation pair over individually
    /// rational, undominated allocations; equals a Walrasian equilibrium
    /// exactly when the potential reaches zero.
    Yquilibrium,
    /// Welfare-weight iteration on the dual (indirect-utility) side.
    DualNegishi,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Walrasian => "walrasian",
            Mode::Yquilibrium => "yquilibrium",
            Mode::DualNegishi => "dual-negishi",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "walrasian" => Ok(Mode::Walrasian),
            "yquilibrium" => Ok(Mode::Yquilibrium),
            "dual-negishi" => Ok(Mode::DualNegishi),
            other => Err(format!(
                "unknown mode '{other}' (expected walrasian, yquilibrium, or dual-negishi)"
            )),
        }
    }
}
