//! Core types for finite exchange economies.
//!
//! An economy has `K` goods in fixed aggregate supply `w` (every entry
//! strictly positive), and `N` consumers with nondecreasing utility functions
//! over bundles in the box `[0, w]`. Purchasing power comes in one of two
//! forms: explicit income shares `m` on the unit simplex, or per-consumer
//! endowments `ω_i` that split the supply exactly. Prices are normalized so
//! the supply bundle is the numeraire: `⟨p|w⟩ = 1`, which makes incomes and
//! utilities comparable across price vectors.

pub mod expr;
pub mod io;

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

pub use expr::{Expr, ExprError};

/// A quantity of each good, indexed like the economy's `supply`.
pub type Bundle = Vec<f64>;

/// Errors from validating or constructing economies and related inputs.
#[derive(Debug, thiserror::Error)]
pub enum EconomyError {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch { what: String, expected: usize, got: usize },

    #[error("negative quantity in {what}: {value}")]
    NegativeQuantity { what: String, value: f64 },

    #[error(
        "endowment sum mismatch for good {good}: endowments add to {total} but supply is {supply}"
    )]
    EndowmentSumMismatch { good: usize, total: f64, supply: f64 },

    #[error("unknown utility family '{family}'")]
    UnknownFamily { family: String },

    #[error("invalid parameter for consumer {consumer}: {reason}")]
    InvalidParameter { consumer: usize, reason: String },

    #[error("income shares sum to {total}, expected 1")]
    IncomeSumMismatch { total: f64 },

    #[error("prices give the supply bundle zero total value")]
    ZeroTotalValue,

    #[error("consumers must either all have endowments or all have incomes")]
    MixedOwnership,

    #[error("invalid configuration: {reason}")]
    BadConfig { reason: String },

    #[error(transparent)]
    Expr(#[from] ExprError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("in {context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<EconomyError>,
    },
}

impl EconomyError {
    /// Attach a human-readable location (e.g. a JSON path) to an error.
    pub fn in_context(self, context: impl Into<String>) -> EconomyError {
        EconomyError::Context { context: context.into(), source: Box::new(self) }
    }
}

/// A consumer's utility function. All families are nondecreasing on the
/// nonnegative orthant; validation enforces the parameter signs that make
/// them so.
#[derive(Debug, Clone, PartialEq)]
pub enum Utility {
    /// `u(x) = Π_k x_k^{a_k}` with every exponent strictly positive.
    CobbDouglas { exponents: Vec<f64> },
    /// `u(x) = min_k x_k / a_k`: `a_k` units of good `k` are required per
    /// unit of utility, so demand moves along the ray through `a`.
    Leontief { requirements: Vec<f64> },
    /// `u(x) = max_k a_k x_k`: perfect substitutes consumed one at a time.
    MaxLinear { coefficients: Vec<f64> },
    /// `u(x) = Σ_k a_k x_k`: classic perfect substitutes.
    Linear { coefficients: Vec<f64> },
    /// `u(x, y) = x + √(y + x²)` on two goods. Quasiconvex along its budget
    /// lines, which makes it a stress test for everything downstream.
    Fenchel,
    /// The quasiconcave envelope of an inner utility on `[0, supply]`,
    /// evaluated on demand and memoized. Built with [`crate::duality::quasiconcavify`].
    Quasiconcavified(Quasiconcavified),
    /// A parsed arithmetic expression over bundle coordinates.
    Custom { text: String, ast: Expr },
}

/// Payload of [`Utility::Quasiconcavified`]: the inner utility, the box cap
/// used for the envelope, and a point cache so repeated evaluations of the
/// (fairly expensive) envelope are cheap inside grid scans.
pub struct Quasiconcavified {
    pub inner: Box<Utility>,
    /// Per-good caps; the aggregate supply of the economy the envelope lives in.
    pub supply: Vec<f64>,
    cache: Mutex<HashMap<Vec<i64>, f64>>,
}

/// Cache keys quantize bundle coordinates to this step so that floating-point
/// noise between near-identical probes still hits the cache.
const CACHE_QUANTUM: f64 = 1e-9;

impl Quasiconcavified {
    pub fn new(inner: Utility, supply: Vec<f64>) -> Self {
        Quasiconcavified { inner: Box::new(inner), supply, cache: Mutex::new(HashMap::new()) }
    }

    /// Look up the cached envelope value at `x`, computing it with `compute`
    /// on a miss.
    pub fn cached(&self, x: &[f64], compute: impl FnOnce() -> f64) -> f64 {
        let key: Vec<i64> = x.iter().map(|v| (v / CACHE_QUANTUM).round() as i64).collect();
        if let Some(&hit) = self.cache.lock().unwrap().get(&key) {
            return hit;
        }
        let value = compute();
        self.cache.lock().unwrap().insert(key, value);
        value
    }
}

impl Clone for Quasiconcavified {
    fn clone(&self) -> Self {
        Quasiconcavified {
            inner: self.inner.clone(),
            supply: self.supply.clone(),
            cache: Mutex::new(self.cache.lock().unwrap().clone()),
        }
    }
}

impl PartialEq for Quasiconcavified {
    fn eq(&self, other: &Self) -> bool {
        self.inner == other.inner && self.supply == other.supply
    }
}

impl std::fmt::Debug for Quasiconcavified {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Quasiconcavified")
            .field("inner", &self.inner)
            .field("supply", &self.supply)
            .finish_non_exhaustive()
    }
}

impl Utility {
    /// Evaluate the utility at a bundle. Assumes the bundle has the
    /// validated number of goods; extra coordinates are ignored by every
    /// family except `Custom`, which reads missing ones as zero.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Utility::CobbDouglas { exponents } => exponents
                .iter()
                .zip(x)
                .map(|(a, xi)| xi.max(0.0).powf(*a))
                .product(),
            Utility::Leontief { requirements } => requirements
                .iter()
                .zip(x)
                .map(|(a, xi)| xi / a)
                .fold(f64::INFINITY, f64::min),
            Utility::MaxLinear { coefficients } => coefficients
                .iter()
                .zip(x)
                .map(|(a, xi)| a * xi)
                .fold(f64::NEG_INFINITY, f64::max),
            Utility::Linear { coefficients } => {
                coefficients.iter().zip(x).map(|(a, xi)| a * xi).sum()
            }
            Utility::Fenchel => x[0] + (x[1] + x[0] * x[0]).sqrt(),
            Utility::Quasiconcavified(q) => crate::duality::envelope_value(q, x),
            Utility::Custom { ast, .. } => ast.eval(x),
        }
    }

    /// Family tag used in serialized form and error messages.
    pub fn family(&self) -> &'static str {
        match self {
            Utility::CobbDouglas { .. } => "cobb-douglas",
            Utility::Leontief { .. } => "leontief",
            Utility::MaxLinear { .. } => "max-linear",
            Utility::Linear { .. } => "linear",
            Utility::Fenchel => "fenchel",
            Utility::Quasiconcavified(..) => "quasiconcavified-wrapper",
            Utility::Custom { .. } => "custom-expression",
        }
    }

    fn validate(&self, consumer: usize, k: usize, supply: &[f64]) -> Result<(), EconomyError> {
        let check_len = |name: &str, len: usize| -> Result<(), EconomyError> {
            if len != k {
                return Err(EconomyError::DimensionMismatch {
                    what: format!("consumer {consumer} {name}"),
                    expected: k,
                    got: len,
                });
            }
            Ok(())
        };
        let invalid = |reason: String| EconomyError::InvalidParameter { consumer, reason };
        match self {
            Utility::CobbDouglas { exponents } => {
                check_len("exponents", exponents.len())?;
                if exponents.iter().any(|a| !a.is_finite() || *a <= 0.0) {
                    return Err(invalid(format!(
                        "cobb-douglas exponents must all be strictly positive, got {exponents:?}"
                    )));
                }
            }
            Utility::Leontief { requirements } => {
                check_len("requirements", requirements.len())?;
                if requirements.iter().any(|a| !a.is_finite() || *a <= 0.0) {
                    return Err(invalid(format!(
                        "leontief requirements must all be strictly positive, got {requirements:?}"
                    )));
                }
            }
            Utility::MaxLinear { coefficients } | Utility::Linear { coefficients } => {
                check_len("coefficients", coefficients.len())?;
                if coefficients.iter().any(|a| !a.is_finite() || *a < 0.0) {
                    return Err(invalid(format!(
                        "coefficients must be nonnegative, got {coefficients:?}"
                    )));
                }
                if coefficients.iter().all(|a| *a == 0.0) {
                    return Err(invalid("coefficients must not all be zero".into()));
                }
            }
            Utility::Fenchel => {
                if k != 2 {
                    return Err(invalid(format!("fenchel utility needs exactly 2 goods, economy has {k}")));
                }
            }
            Utility::Quasiconcavified(q) => {
                check_len("envelope caps", q.supply.len())?;
                for (cap, w) in q.supply.iter().zip(supply) {
                    if (cap - w).abs() > 1e-9 * w.max(1.0) {
                        return Err(invalid(format!(
                            "envelope caps {:?} do not match the economy supply {supply:?}",
                            q.supply
                        )));
                    }
                }
                q.inner.validate(consumer, k, supply)?;
            }
            Utility::Custom { ast, .. } => {
                if let Some(max_var) = ast.max_var() {
                    if max_var >= k {
                        return Err(invalid(format!(
                            "expression references good {} but the economy has {k} goods",
                            max_var + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Who owns the purchasing power: explicit income shares, or endowments that
/// split the supply. Every consumer must use the same form.
#[derive(Debug, Clone, PartialEq)]
pub enum Ownership {
    /// Income shares on the unit simplex (`Σ m_i = 1`).
    Incomes(Vec<f64>),
    /// Per-consumer endowments with `Σ_i ω_i = supply`.
    Endowments(Vec<Bundle>),
}

/// An exchange economy: goods in fixed supply and consumers who trade them.
#[derive(Debug, Clone, PartialEq)]
pub struct Economy {
    /// Display names for the goods, e.g. `["x", "y"]`.
    pub goods: Vec<String>,
    /// Aggregate supply `w_k > 0` of each good.
    pub supply: Vec<f64>,
    /// One utility function per consumer.
    pub utilities: Vec<Utility>,
    /// Income shares or endowments, aligned with `utilities`.
    pub ownership: Ownership,
}

impl Economy {
    pub fn n(&self) -> usize {
        self.utilities.len()
    }

    pub fn k(&self) -> usize {
        self.supply.len()
    }

    /// Utility of consumer `i` at bundle `x`.
    pub fn utility(&self, i: usize, x: &[f64]) -> f64 {
        self.utilities[i].eval(x)
    }

    /// Income of each consumer at prices `p`: the fixed shares in income
    /// mode, or endowment values `⟨p|ω_i⟩` in endowment mode. With normalized
    /// prices both versions sum to `⟨p|w⟩ = 1`.
    pub fn incomes_at(&self, p: &PriceVector) -> Vec<f64> {
        match &self.ownership {
            Ownership::Incomes(m) => m.clone(),
            Ownership::Endowments(omega) => {
                omega.iter().map(|o| dot(&p.0, o)).collect()
            }
        }
    }

    /// The endowment matrix, if this economy specifies one.
    pub fn endowments(&self) -> Option<&[Bundle]> {
        match &self.ownership {
            Ownership::Incomes(_) => None,
            Ownership::Endowments(omega) => Some(omega),
        }
    }

    /// Check all structural invariants. Everything downstream assumes a
    /// validated economy.
    pub fn validate(&self) -> Result<(), EconomyError> {
        let k = self.k();
        let n = self.n();
        if k == 0 {
            return Err(EconomyError::DimensionMismatch {
                what: "goods".into(),
                expected: 1,
                got: 0,
            });
        }
        if n == 0 {
            return Err(EconomyError::DimensionMismatch {
                what: "consumers".into(),
                expected: 1,
                got: 0,
            });
        }
        if self.goods.len() != k {
            return Err(EconomyError::DimensionMismatch {
                what: "good names".into(),
                expected: k,
                got: self.goods.len(),
            });
        }
        for (idx, w) in self.supply.iter().enumerate() {
            if !w.is_finite() || *w <= 0.0 {
                return Err(EconomyError::NegativeQuantity {
                    what: format!("supply of good {idx} (must be strictly positive)"),
                    value: *w,
                });
            }
        }
        for (i, u) in self.utilities.iter().enumerate() {
            u.validate(i, k, &self.supply)?;
        }
        match &self.ownership {
            Ownership::Incomes(m) => {
                if m.len() != n {
                    return Err(EconomyError::DimensionMismatch {
                        what: "income shares".into(),
                        expected: n,
                        got: m.len(),
                    });
                }
                for (i, mi) in m.iter().enumerate() {
                    if !mi.is_finite() || *mi < 0.0 {
                        return Err(EconomyError::NegativeQuantity {
                            what: format!("income of consumer {i}"),
                            value: *mi,
                        });
                    }
                }
                let total: f64 = m.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(EconomyError::IncomeSumMismatch { total });
                }
            }
            Ownership::Endowments(omega) => {
                if omega.len() != n {
                    return Err(EconomyError::DimensionMismatch {
                        what: "endowments".into(),
                        expected: n,
                        got: omega.len(),
                    });
                }
                for (i, o) in omega.iter().enumerate() {
                    if o.len() != k {
                        return Err(EconomyError::DimensionMismatch {
                            what: format!("endowment of consumer {i}"),
                            expected: k,
                            got: o.len(),
                        });
                    }
                    for (idx, v) in o.iter().enumerate() {
                        if !v.is_finite() || *v < 0.0 {
                            return Err(EconomyError::NegativeQuantity {
                                what: format!("endowment of consumer {i}, good {idx}"),
                                value: *v,
                            });
                        }
                    }
                }
                for good in 0..k {
                    let total: f64 = omega.iter().map(|o| o[good]).sum();
                    let w = self.supply[good];
                    if (total - w).abs() > 1e-12 * w.max(1.0) {
                        return Err(EconomyError::EndowmentSumMismatch { good, total, supply: w });
                    }
                }
            }
        }
        Ok(())
    }
}

/// A feasible assignment of bundles to consumers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation(pub Vec<Bundle>);

impl Allocation {
    /// Total amount of good `k` across consumers.
    pub fn total(&self, k: usize) -> f64 {
        self.0.iter().map(|x| x[k]).sum()
    }

    /// Nonnegative bundles that do not over-consume any good, up to `tol`.
    pub fn is_feasible(&self, supply: &[f64], tol: f64) -> bool {
        self.0.iter().all(|x| x.iter().all(|v| *v >= -tol))
            && (0..supply.len()).all(|k| self.total(k) <= supply[k] + tol)
    }

    /// Worst violation of exact market clearing `Σ_i x_i = supply`.
    pub fn clearing_residual(&self, supply: &[f64]) -> f64 {
        (0..supply.len())
            .map(|k| (self.total(k) - supply[k]).abs())
            .fold(0.0, f64::max)
    }
}

/// Prices normalized so the supply bundle costs 1 (`⟨p|w⟩ = 1`, all `p_k ≥ 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceVector(pub Vec<f64>);

impl PriceVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Value `⟨p|x⟩` of a bundle at these prices.
    pub fn value(&self, x: &[f64]) -> f64 {
        dot(&self.0, x)
    }
}

/// Income shares on the unit simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncomeDistribution(pub Vec<f64>);

/// Scale nonnegative raw prices so that `⟨p|supply⟩ = 1`. Idempotent:
/// already-normalized prices come back bit-for-bit (dividing by 1.0 is exact).
pub fn normalize_prices(raw: &[f64], supply: &[f64]) -> Result<PriceVector, EconomyError> {
    if raw.len() != supply.len() {
        return Err(EconomyError::DimensionMismatch {
            what: "prices".into(),
            expected: supply.len(),
            got: raw.len(),
        });
    }
    for (k, v) in raw.iter().enumerate() {
        if !v.is_finite() || *v < 0.0 {
            return Err(EconomyError::NegativeQuantity {
                what: format!("price of good {k}"),
                value: *v,
            });
        }
    }
    let total = dot(raw, supply);
    if total <= 0.0 {
        return Err(EconomyError::ZeroTotalValue);
    }
    Ok(PriceVector(raw.iter().map(|v| v / total).collect()))
}

/// Inner product `Σ_k a_k b_k`.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Knobs shared by the solvers and the oracle-facing tooling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Points per axis in coarse scans over prices and allocations.
    pub grid_resolution: usize,
    /// Number of seeded random restarts for the local refinement stage.
    pub multistart_count: usize,
    /// Iterations of derivative-free refinement per start.
    pub refine_iterations: usize,
    /// Residual tolerance for accepting a root/solution.
    pub tol_solve: f64,
    /// Looser tolerance for matching reference values and deduplicating optima.
    pub tol_accept: f64,
    /// Lower bound applied to every normalized price to keep incomes positive.
    pub price_floor: f64,
    /// Seed for all randomized stages; equal seeds give identical runs.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            grid_resolution: 96,
            multistart_count: 12,
            refine_iterations: 64,
            tol_solve: 1e-6,
            tol_accept: 1e-3,
            price_floor: 1e-6,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), EconomyError> {
        let bad = |reason: String| Err(EconomyError::BadConfig { reason });
        if self.grid_resolution < 2 {
            return bad(format!("grid-resolution must be at least 2, got {}", self.grid_resolution));
        }
        if self.multistart_count == 0 {
            return bad("multistart-count must be at least 1".into());
        }
        if !(self.tol_solve > 0.0) || !(self.tol_accept > 0.0) {
            return bad("tolerances must be strictly positive".into());
        }
        if !(self.price_floor > 0.0 && self.price_floor < 0.01) {
            return bad(format!("price-floor must lie in (0, 0.01), got {}", self.price_floor));
        }
        Ok(())
    }
}
