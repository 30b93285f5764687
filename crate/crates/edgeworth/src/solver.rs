//! Production solvers: equilibria located by maximizing the economy's potential.
//!
//! Everything here searches the same scalar landscape. Fix normalized prices
//! `p`; incomes are either given directly or implied by endowments
//! (`m_i = ⟨p|ω_i⟩`). The *potential* of a budget-exact feasible allocation
//! `x` at those prices is
//!
//! ```text
//! Y(x, p) = Σ_i α_i · (u_i(x_i) − v̄_i(p, m_i))
//! ```
//!
//! — the weighted sum of what each consumer actually gets minus the best
//! their budget could buy within the aggregate supply caps. `Y ≤ 0` on its
//! whole domain, and `Y = 0` exactly at the capped market-clearing
//! equilibria, so root-finding becomes maximization:
//!
//! * [`solve_walrasian_income`] maximizes `Y` over prices at fixed incomes
//!   and reports a root, or returns the best incumbent as an error when the
//!   maximum stays strictly negative (no clearing price exists);
//! * [`solve_walrasian_endowment`] sweeps income distributions and keeps
//!   those consistent with endowment values at their own clearing prices —
//!   a fixed-point condition that can have several solutions;
//! * [`solve_yquilibrium`] maximizes `Y` jointly over prices and allocations
//!   subject to individual rationality and a Pareto-dominance screen, which
//!   stays meaningful when no equilibrium exists and reproduces the
//!   Walrasian result when one does;
//! * [`dual_negishi_minimize`] alternates welfare weights with dual-welfare
//!   price minimization, a classical route to the same prices for smooth
//!   convex economies.
//!
//! The searches are derivative-free throughout: coarse grids over the price
//! segment/simplex, seeded random restarts, compass (coordinate) pattern
//! descent with step halving, and bisection for the edges of optimal
//! plateaus. Ties are always broken toward the lexicographically smallest
//! `(p, x)`, so equal configurations reproduce byte-identical results.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::duality::{indirect_utility, marshallian_demand, negishi_weights};
use crate::economy::{
    dot, normalize_prices, Allocation, Bundle, Economy, EconomyError, IncomeDistribution,
    Ownership, PriceVector, SolverConfig,
};
use crate::prices::{budget_segment, lex_le, linspace, price_from_share, price_grid, share_bounds};

pub use crate::prices::{linear_price_consistent, PriceSet};

/// Two optima closer than this in potential are treated as exact ties.
const TIE_EPS: f64 = 1e-9;
/// Accepted slack when bisecting the edge of an optimal price plateau.
const EDGE_SLACK: f64 = 1e-12;
/// Score loss treated as pure floating-point noise when the allocation
/// polish walks along a flat stretch. Kept two orders below [`EDGE_SLACK`]
/// so the polish never trades real potential for lexicographic position.
const FLAT_SLACK: f64 = 1e-14;
/// A pattern-search probe must beat the incumbent by this much to move.
const STRICT_IMPROVE: f64 = 1e-15;
/// Pattern steps below this are considered converged.
const H_MIN: f64 = 1e-13;
/// Bisection iterations for plateau edges (localizes to ~1e-18 of the span).
const BISECT_ITERS: usize = 60;
/// Outer-loop cap for the welfare-weight iteration.
const NEGISHI_MAX_ITERS: usize = 100;
/// Scan resolution for one-dimensional dual-welfare minimization.
const DUAL_SCAN_RES: usize = 257;
/// Grid resolution of the independent dominance cross-check on a winner.
const CROSS_CHECK_RES: usize = 61;
/// Weak side of the dominance comparison: candidate `d` weakly covers `c`
/// when every consumer gets at least `u_c − DOM_WEAK` under `d`.
const DOM_WEAK: f64 = 1e-9;

/// Which solution concept a result certifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolutionKind {
    /// The potential vanished: prices clear the market and every consumer
    /// holds a best affordable bundle (up to the supply caps).
    Walrasian,
    /// The potential stayed strictly negative: the reported point is the
    /// constrained maximizer, not a market-clearing equilibrium.
    Yquilibrium,
}

/// A near-optimal solution distinct from the primary one.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Alternate {
    pub p: PriceVector,
    pub x: Allocation,
    /// Utilities `u_i(x_i)` at this alternative.
    pub utilities: Vec<f64>,
    /// Potential at this alternative (within `tol-accept` of the best).
    pub potential: f64,
}

/// Search diagnostics attached to every result.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Diagnostics {
    /// Pattern-search sweeps spent refining the reported solution.
    pub iterations: usize,
    /// Number of distinct search starts (grid candidates and random restarts).
    pub restarts: usize,
    /// `‖Σ_i x_i − w‖∞` at the reported allocation.
    pub clearing_residual: f64,
    /// `max_i |⟨p|x_i⟩ − m_i|` at the reported point.
    pub budget_residual: f64,
    /// `‖⟨p|ω_i⟩ − m_i‖∞` at an endowment-mode fixed point; `None` in income mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_point_residual: Option<f64>,
    /// Whether the reported price sits against the configured price floor.
    pub floor_contact: bool,
}

/// The output of every equilibrium solver.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct EquilibriumResult {
    /// Normalized prices, `⟨p|w⟩ = 1`.
    pub p: PriceVector,
    /// The allocation; budget-exact and feasible.
    pub x: Allocation,
    /// Incomes: the given shares, or `⟨p|ω_i⟩` when endowments were given.
    pub m: IncomeDistribution,
    /// Utilities `u_i(x_i)`.
    pub utilities: Vec<f64>,
    /// `gap_i = v̄_i(p, m_i) − u_i(x_i) ≥ 0`: how far consumer `i` falls short
    /// of the best bundle their budget buys. All zero ⟺ the point is an
    /// equilibrium.
    pub gaps: Vec<f64>,
    /// Welfare weights `α` used in the potential (all ones unless overridden).
    pub weights: Vec<f64>,
    /// `Y* = −Σ_i α_i·gap_i ≤ 0`.
    pub potential: f64,
    pub kind: SolutionKind,
    /// True when other optima tie within `tol-accept`; see `alternates` and
    /// `price_interval`.
    pub multiple: bool,
    /// Distinct near-optimal solutions, deduplicated at `10·tol-accept` in
    /// `(p, x)` and sorted lexicographically.
    pub alternates: Vec<Alternate>,
    /// When a whole contiguous band of prices is optimal (flat families such
    /// as `min`-utilities, or price plateaus of non-convex economies), its
    /// extreme points; the primary result is the band's lexicographically
    /// smallest member.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub price_interval: Option<(PriceVector, PriceVector)>,
    pub diagnostics: Diagnostics,
    pub warnings: Vec<String>,
}

/// One outer iteration of the welfare-weight loop.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct NegishiStep {
    pub p: PriceVector,
    pub weights: Vec<f64>,
    /// Minimized weighted dual welfare at these weights.
    pub value: f64,
}

/// Result of [`dual_negishi_minimize`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct NegishiOutcome {
    /// The fixed-point prices of the weight iteration.
    pub p: PriceVector,
    /// Converged welfare weights `α_i = 1/(∂v_i/∂m_i)`.
    pub weights: Vec<f64>,
    /// Minimized weighted dual welfare `Σ α_i v_i(p, m_i)` at the final step.
    pub value: f64,
    pub iterations: usize,
    /// Price, weights, and value after each outer iteration.
    pub trace: Vec<NegishiStep>,
    /// `‖Σ_i d_i(p, m_i) − w‖∞` with optimal demands at the final prices.
    pub clearing_residual: f64,
    pub warnings: Vec<String>,
}

/// Everything that can go wrong while solving.
#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error(transparent)]
    Economy(#[from] EconomyError),
    /// The maximized potential stayed below `−tol-solve`: no clearing price
    /// exists (or the configuration is too coarse to find one). The best
    /// point found is attached so callers can still inspect and report it.
    #[error("no market-clearing price found: best potential {:.6e} is still negative", incumbent.potential)]
    NoRoot { incumbent: Box<EquilibriumResult> },
    /// The welfare-weight iteration kept moving after the iteration cap.
    #[error("weight iteration did not settle within {iterations} iterations")]
    NoConverge { iterations: usize, outcome: Box<NegishiOutcome> },
}

// ---------------------------------------------------------------------------
// The potential.
// ---------------------------------------------------------------------------

/// The economy's potential `Y(x, p) = Σ_i α_i (u_i(x_i) − v̄_i(p, m_i))`.
///
/// Incomes come from the economy's ownership: given shares directly, or the
/// endowment values `⟨p|ω_i⟩`. The indirect utilities are always the
/// *restricted* ones (best bundle affordable within the supply caps); without
/// the caps the comparison could be unwinnable at prices where a budget buys
/// more of a good than exists, and the sign guarantee below would fail.
///
/// At any budget-exact feasible `(x, p)` the value is `≤ 0` because each
/// `x_i` is one of the bundles `v̄_i` maximizes over; it reaches `0` exactly
/// when every consumer's bundle is budget-optimal, i.e. at a capped
/// market-clearing equilibrium. The value is linear in the weights `α`.
pub fn potential(
    economy: &Economy,
    x: &Allocation,
    p: &PriceVector,
    alpha: &[f64],
) -> Result<f64, EconomyError> {
    economy.validate()?;
    let n = economy.n();
    let k = economy.k();
    if x.0.len() != n {
        return Err(EconomyError::DimensionMismatch {
            what: "allocation rows".into(),
            expected: n,
            got: x.0.len(),
        });
    }
    if let Some(bad) = x.0.iter().find(|xi| xi.len() != k) {
        return Err(EconomyError::DimensionMismatch {
            what: "allocation bundle length".into(),
            expected: k,
            got: bad.len(),
        });
    }
    if p.0.len() != k {
        return Err(EconomyError::DimensionMismatch {
            what: "price vector length".into(),
            expected: k,
            got: p.0.len(),
        });
    }
    if alpha.len() != n {
        return Err(EconomyError::DimensionMismatch {
            what: "weight vector length".into(),
            expected: n,
            got: alpha.len(),
        });
    }
    if let Some(a) = alpha.iter().find(|a| !(**a > 0.0)) {
        return Err(EconomyError::BadConfig {
            reason: format!("welfare weights must be strictly positive, got {a}"),
        });
    }
    let m = economy.incomes_at(p);
    let mut y = 0.0;
    for i in 0..n {
        let vbar = indirect_utility(&economy.utilities[i], p.as_slice(), m[i], &economy.supply, true);
        y += alpha[i] * (economy.utility(i, &x.0[i]) - vbar);
    }
    Ok(y)
}

// ---------------------------------------------------------------------------
// Derivative-free building blocks.
// ---------------------------------------------------------------------------

fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Compass pattern search: probe `±h` along each coordinate, keep strict
/// improvements, halve every step after a sweep with no progress, stop when
/// all steps shrink below [`H_MIN`]. Infeasible probes (`None`) are skipped.
/// Returns the best value and the number of sweeps used.
fn compass_maximize(
    eval: &dyn Fn(&[f64]) -> Option<f64>,
    pos: &mut [f64],
    lo: &[f64],
    hi: &[f64],
    h0: &[f64],
    sweep_cap: usize,
) -> (f64, usize) {
    let mut best = match eval(pos) {
        Some(v) => v,
        None => return (f64::NEG_INFINITY, 0),
    };
    let mut h: Vec<f64> = h0.to_vec();
    let mut sweeps = 0;
    while sweeps < sweep_cap {
        sweeps += 1;
        let mut improved = false;
        for d in 0..pos.len() {
            for sgn in [1.0, -1.0] {
                let cand = (pos[d] + sgn * h[d]).clamp(lo[d], hi[d]);
                if cand == pos[d] {
                    continue;
                }
                let old = pos[d];
                pos[d] = cand;
                match eval(pos) {
                    Some(v) if v > best + STRICT_IMPROVE => {
                        best = v;
                        improved = true;
                    }
                    _ => pos[d] = old,
                }
            }
        }
        if !improved {
            for hd in h.iter_mut() {
                *hd *= 0.5;
            }
            if h.iter().all(|hd| *hd < H_MIN) {
                break;
            }
        }
    }
    (best, sweeps)
}

/// Push `pos[d]` as low as it can go while the score stays within
/// [`FLAT_SLACK`] of `best` — the deterministic tie-break that makes flat
/// optima reproducible. Jumps straight to `lo_d` when the whole range is
/// flat; otherwise bisects the edge of the acceptable region. The slack is
/// floating-point-noise sized: on a sloped dimension the polish must stay
/// put, not buy lexicographic position with real score.
fn shrink_dim_to_edge(
    eval: &dyn Fn(&[f64]) -> Option<f64>,
    pos: &mut [f64],
    d: usize,
    lo_d: f64,
    best: f64,
) {
    let thr = best - FLAT_SLACK * (1.0 + best.abs());
    if pos[d] <= lo_d {
        return;
    }
    let ok_at = |pos: &mut [f64], v: f64| -> bool {
        let old = pos[d];
        pos[d] = v;
        let ok = matches!(eval(pos), Some(y) if y >= thr);
        pos[d] = old;
        ok
    };
    if ok_at(pos, lo_d) {
        pos[d] = lo_d;
        return;
    }
    let (mut bad, mut good) = (lo_d, pos[d]);
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (bad + good);
        if ok_at(pos, mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    pos[d] = good;
}

// ---------------------------------------------------------------------------
// Inner problem: best budget-exact feasible allocation at fixed prices.
// ---------------------------------------------------------------------------

/// Best allocation found at one price point, with its positions in the
/// budget-exact parameterization.
#[derive(Debug, Clone)]
struct InnerBest {
    x: Vec<Bundle>,
    u: Vec<f64>,
    /// `Σ α_i u_i − Σ α_i v̄_i` — the potential at these prices.
    y: f64,
}

/// Free coordinates of a budget-exact allocation: for each consumer except
/// the last, all bundle coordinates but the final one (the final coordinate
/// spends the rest of the budget, and the last consumer takes what's left of
/// the supply). Returns per-dimension bounds, or `None` if some consumer
/// cannot spend their income inside the supply box at these prices.
fn position_bounds(economy: &Economy, p: &PriceVector, m: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = economy.n();
    let k = economy.k();
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for i in 0..n - 1 {
        if k == 2 {
            let (a, b) = budget_segment(p.as_slice(), m[i], &economy.supply)?;
            lo.push(a);
            hi.push(b);
        } else {
            for j in 0..k - 1 {
                lo.push(0.0);
                hi.push(economy.supply[j].min(m[i] / p.0[j].max(f64::MIN_POSITIVE)));
            }
        }
    }
    // The last consumer's bundle is forced; make sure their budget is
    // spendable at all (otherwise no budget-exact point exists).
    if k == 2 {
        budget_segment(p.as_slice(), m[n - 1], &economy.supply)?;
    }
    Some((lo, hi))
}

/// Reconstruct bundles from free positions. Returns `None` when a derived
/// coordinate (a budget remainder or the forced last bundle) leaves the
/// supply box by more than 1e-9; values within 1e-9 are snapped back in, so
/// corner optima survive floating-point noise.
fn bundles_at(economy: &Economy, p: &PriceVector, m: &[f64], positions: &[f64]) -> Option<Vec<Bundle>> {
    let n = economy.n();
    let k = economy.k();
    let w = &economy.supply;
    let snap = |v: f64, cap: f64| -> Option<f64> {
        if v < -1e-9 || v > cap + 1e-9 {
            None
        } else {
            Some(v.clamp(0.0, cap))
        }
    };
    let mut xs: Vec<Bundle> = Vec::with_capacity(n);
    let mut rest = w.clone();
    for i in 0..n - 1 {
        let frees = &positions[i * (k - 1)..(i + 1) * (k - 1)];
        let spent: f64 = frees.iter().zip(&p.0).map(|(x, pj)| x * pj).sum();
        let last = (m[i] - spent) / p.0[k - 1];
        let mut xi: Bundle = Vec::with_capacity(k);
        for (j, v) in frees.iter().enumerate() {
            xi.push(snap(*v, w[j])?);
        }
        xi.push(snap(last, w[k - 1])?);
        for j in 0..k {
            rest[j] -= xi[j];
        }
        xs.push(xi);
    }
    let mut xlast = Vec::with_capacity(k);
    for (j, v) in rest.iter().enumerate() {
        xlast.push(snap(*v, w[j])?);
    }
    xs.push(xlast);
    Some(xs)
}

/// Maximize `Σ α_i u_i(x_i)` over budget-exact feasible allocations at fixed
/// prices (equivalently the potential, since `Σ α_i v̄_i` is constant here),
/// optionally subject to the floor utilities `ir`. Seeds: a coordinate scan
/// (up to two free dimensions), each consumer's optimal demand, and any
/// caller-provided positions; refined by compass search and finished with a
/// lexicographic edge polish so flat regions resolve deterministically.
fn maximize_allocation(
    economy: &Economy,
    p: &PriceVector,
    m: &[f64],
    alpha: &[f64],
    vbar_total: f64,
    ir: Option<&[f64]>,
    extra_seeds: &[Vec<f64>],
    res: usize,
    sweep_cap: usize,
) -> Option<InnerBest> {
    let n = economy.n();
    let k = economy.k();
    let (lo, hi) = position_bounds(economy, p, m)?;
    let dims = lo.len();

    let score = |pos: &[f64]| -> Option<f64> {
        let xs = bundles_at(economy, p, m, pos)?;
        let mut total = 0.0;
        for i in 0..n {
            let ui = economy.utility(i, &xs[i]);
            if let Some(floors) = ir {
                if ui < floors[i] - 1e-9 {
                    return None;
                }
            }
            total += alpha[i] * ui;
        }
        Some(total - vbar_total)
    };

    // Seed candidates.
    let mut seeds: Vec<Vec<f64>> = Vec::new();
    match dims {
        1 => {
            for b in linspace(lo[0], hi[0], res.max(9)) {
                seeds.push(vec![b]);
            }
        }
        2 => {
            let r = res.clamp(9, 33);
            for a in linspace(lo[0], hi[0], r) {
                for b in linspace(lo[1], hi[1], r) {
                    seeds.push(vec![a, b]);
                }
            }
        }
        _ => {
            seeds.push(lo.clone());
            seeds.push(hi.clone());
            seeds.push(lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect());
        }
    }
    // Optimal demands make the potential exactly zero at clearing prices, so
    // they are the decisive seeds wherever an equilibrium actually exists.
    let mut demand_pos: Vec<f64> = Vec::with_capacity(dims);
    for i in 0..n - 1 {
        let d = marshallian_demand(&economy.utilities[i], p.as_slice(), m[i], &economy.supply, true);
        for j in 0..k - 1 {
            let base = i * (k - 1) + j;
            demand_pos.push(d.x[j].clamp(lo[base], hi[base]));
        }
    }
    seeds.push(demand_pos);
    for extra in extra_seeds {
        if extra.len() == dims {
            seeds.push(extra.iter().enumerate().map(|(d, v)| v.clamp(lo[d], hi[d])).collect());
        }
    }

    let mut best_pos: Option<Vec<f64>> = None;
    let mut best = f64::NEG_INFINITY;
    for seed in &seeds {
        if let Some(v) = score(seed) {
            if v > best + STRICT_IMPROVE || best_pos.is_none() {
                if v > best {
                    best = v;
                    best_pos = Some(seed.clone());
                }
            }
        }
    }
    let mut pos = best_pos?;

    let h0: Vec<f64> = lo
        .iter()
        .zip(&hi)
        .map(|(a, b)| ((b - a) / res.max(9) as f64).max(1e-9))
        .collect();
    let (mut y, _) = compass_maximize(&score, &mut pos, &lo, &hi, &h0, sweep_cap);

    // Resolve flat stretches to their lexicographically smallest corner.
    for d in 0..dims {
        shrink_dim_to_edge(&score, &mut pos, d, lo[d], y);
    }
    y = score(&pos)?;

    let x = bundles_at(economy, p, m, &pos)?;
    let u: Vec<f64> = x.iter().enumerate().map(|(i, xi)| economy.utility(i, xi)).collect();
    Some(InnerBest { x, u, y })
}

// ---------------------------------------------------------------------------
// Outer problem: search over prices.
// ---------------------------------------------------------------------------

/// A fully evaluated price point.
#[derive(Debug, Clone)]
struct PriceCandidate {
    /// Budget share of good 1 (two-good economies only; `NaN` otherwise).
    b: f64,
    p: PriceVector,
    m: Vec<f64>,
    inner: InnerBest,
}

/// What the price search needs to know besides the economy.
struct SearchCtx<'a> {
    economy: &'a Economy,
    alpha: &'a [f64],
    /// Fixed incomes, or `None` to value endowments at each price.
    incomes: Option<&'a [f64]>,
    /// Individual-rationality floors (Yquilibrium mode).
    ir: Option<Vec<f64>>,
    /// Extra inner seeds (endowment positions are always budget-exact).
    extra_seeds: Vec<Vec<f64>>,
    config: &'a SolverConfig,
}

impl SearchCtx<'_> {
    fn incomes_at(&self, p: &PriceVector) -> Vec<f64> {
        match self.incomes {
            Some(m) => m.to_vec(),
            None => self.economy.incomes_at(p),
        }
    }

    fn inner_sweep_cap(&self) -> usize {
        4 * self.config.refine_iterations.max(64)
    }

    /// Evaluate one price: restricted indirect utilities, then the inner
    /// allocation maximization.
    fn eval_price(&self, p: &PriceVector, b: f64) -> Option<PriceCandidate> {
        let m = self.incomes_at(p);
        let mut vbar_total = 0.0;
        for i in 0..self.economy.n() {
            vbar_total += self.alpha[i]
                * indirect_utility(
                    &self.economy.utilities[i],
                    p.as_slice(),
                    m[i],
                    &self.economy.supply,
                    true,
                );
        }
        let inner = maximize_allocation(
            self.economy,
            p,
            &m,
            self.alpha,
            vbar_total,
            self.ir.as_deref(),
            &self.extra_seeds,
            self.config.grid_resolution,
            self.inner_sweep_cap(),
        )?;
        Some(PriceCandidate { b, p: p.clone(), m, inner })
    }

    fn eval_share(&self, b: f64) -> Option<PriceCandidate> {
        let p = price_from_share(b, &self.economy.supply);
        self.eval_price(&p, b)
    }
}

/// Everything the two-good price sweep produces.
struct SweepOutcome {
    /// Grid shares and the candidate at each (infeasible prices are `None`).
    bs: Vec<f64>,
    grid: Vec<Option<PriceCandidate>>,
    /// The pattern-refined best (over grid best and random restarts).
    best: PriceCandidate,
    restarts: usize,
    sweeps: usize,
}

/// Grid scan plus pattern refinement over the one-dimensional price segment
/// of a two-good economy, parameterized by the budget share `b = p_1 w_1`.
fn sweep_shares_k2(ctx: &SearchCtx) -> Result<SweepOutcome, EconomyError> {
    let cfg = ctx.config;
    let (b_lo, b_hi) = share_bounds(&ctx.economy.supply, cfg.price_floor);
    let bs = linspace(b_lo, b_hi, cfg.grid_resolution.max(2));
    let grid: Vec<Option<PriceCandidate>> =
        bs.par_iter().map(|b| ctx.eval_share(*b)).collect();

    let mut starts: Vec<f64> = Vec::new();
    if let Some(best_grid) = grid
        .iter()
        .flatten()
        .max_by(|a, c| a.inner.y.partial_cmp(&c.inner.y).unwrap_or(std::cmp::Ordering::Equal))
    {
        starts.push(best_grid.b);
    } else {
        return Err(EconomyError::BadConfig {
            reason: "no feasible budget-exact point at any scanned price; \
                     check incomes against the supply caps"
                .into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.multistart_count {
        starts.push(rng.random_range(b_lo..=b_hi));
    }

    let step = (b_hi - b_lo) / (bs.len().max(2) - 1) as f64;
    let eval_y = |pos: &[f64]| ctx.eval_share(pos[0]).map(|c| c.inner.y);
    let refined: Vec<(f64, usize)> = starts
        .par_iter()
        .map(|b0| {
            let mut pos = vec![*b0];
            let (_, sweeps) = compass_maximize(
                &eval_y,
                &mut pos,
                &[b_lo],
                &[b_hi],
                &[step],
                cfg.refine_iterations.max(64),
            );
            (pos[0], sweeps)
        })
        .collect();

    let mut best: Option<PriceCandidate> = None;
    let mut total_sweeps = 0;
    for (b, sweeps) in &refined {
        total_sweeps += sweeps;
        if let Some(c) = ctx.eval_share(*b) {
            if best.as_ref().map_or(true, |b0| c.inner.y > b0.inner.y + STRICT_IMPROVE) {
                best = Some(c);
            }
        }
    }
    let best = best.expect("refinement started from a feasible grid point");
    Ok(SweepOutcome { bs, grid, best, restarts: starts.len(), sweeps: total_sweeps })
}

/// Price scan for three or more goods: evaluate the whole simplex grid, then
/// compass-refine the free budget shares of the best cell. Plateau-band
/// reporting is a two-good feature; here ties surface as alternates only.
fn sweep_shares_k3(ctx: &SearchCtx) -> Result<SweepOutcome, EconomyError> {
    let cfg = ctx.config;
    let supply = &ctx.economy.supply;
    let k = supply.len();
    let res = cfg.grid_resolution.clamp(2, 24);
    let grid_prices = price_grid(supply, res, cfg.price_floor);
    let grid: Vec<Option<PriceCandidate>> = grid_prices
        .par_iter()
        .map(|p| ctx.eval_price(p, f64::NAN))
        .collect();
    let best_grid = grid
        .iter()
        .flatten()
        .max_by(|a, c| a.inner.y.partial_cmp(&c.inner.y).unwrap_or(std::cmp::Ordering::Equal))
        .ok_or_else(|| EconomyError::BadConfig {
            reason: "no feasible budget-exact point at any scanned price".into(),
        })?;

    // Refine in share space: s_j = p_j w_j for j < k−1, the last share is
    // the remainder.
    let floor_share: Vec<f64> = supply.iter().map(|w| cfg.price_floor * w).collect();
    let mut pos: Vec<f64> = best_grid.p.0.iter().zip(supply).map(|(p, w)| p * w).take(k - 1).collect();
    let lo: Vec<f64> = floor_share[..k - 1].to_vec();
    let hi: Vec<f64> = (0..k - 1).map(|j| 1.0 - floor_share[j + 1..].iter().sum::<f64>() - floor_share[..j].iter().sum::<f64>()).collect();
    let eval_y = |s: &[f64]| -> Option<f64> {
        let last = 1.0 - s.iter().sum::<f64>();
        if last < floor_share[k - 1] {
            return None;
        }
        let mut raw: Vec<f64> = s.iter().zip(supply).map(|(sj, w)| sj / w).collect();
        raw.push(last / supply[k - 1]);
        let p = PriceVector(raw);
        ctx.eval_price(&p, f64::NAN).map(|c| c.inner.y)
    };
    let h0 = vec![1.0 / res as f64; k - 1];
    let (_, sweeps) =
        compass_maximize(&eval_y, &mut pos, &lo, &hi, &h0, cfg.refine_iterations.max(64));
    let last = 1.0 - pos.iter().sum::<f64>();
    let mut raw: Vec<f64> = pos.iter().zip(supply).map(|(sj, w)| sj / w).collect();
    raw.push(last / supply[k - 1]);
    let best = ctx
        .eval_price(&PriceVector(raw), f64::NAN)
        .unwrap_or_else(|| best_grid.clone());
    let bs = Vec::new();
    Ok(SweepOutcome { bs, grid, best, restarts: grid_prices.len(), sweeps })
}

// ---------------------------------------------------------------------------
// Result assembly.
// ---------------------------------------------------------------------------

fn lex_key(c: &PriceCandidate) -> Vec<f64> {
    let mut key = c.p.0.clone();
    for xi in &c.inner.x {
        key.extend_from_slice(xi);
    }
    key
}

fn candidate_distance(a: &PriceCandidate, b: &PriceCandidate) -> f64 {
    inf_dist(&lex_key(a), &lex_key(b))
}

/// Wrap a winning candidate into the public result type, recomputing the
/// per-consumer gaps so the reported potential and gaps agree exactly.
fn package(
    economy: &Economy,
    c: &PriceCandidate,
    alpha: &[f64],
    config: &SolverConfig,
    multiple: bool,
    alternates: Vec<Alternate>,
    price_interval: Option<(PriceVector, PriceVector)>,
    mut diagnostics: Diagnostics,
    mut warnings: Vec<String>,
) -> EquilibriumResult {
    let n = economy.n();
    let mut gaps = Vec::with_capacity(n);
    let mut potential_value = 0.0;
    for i in 0..n {
        let vbar =
            indirect_utility(&economy.utilities[i], c.p.as_slice(), c.m[i], &economy.supply, true);
        let gap = vbar - c.inner.u[i];
        potential_value -= alpha[i] * gap;
        gaps.push(gap);
    }
    let x = Allocation(c.inner.x.clone());
    diagnostics.clearing_residual = x.clearing_residual(&economy.supply);
    diagnostics.budget_residual = c
        .inner
        .x
        .iter()
        .zip(&c.m)
        .map(|(xi, mi)| (dot(c.p.as_slice(), xi) - mi).abs())
        .fold(0.0, f64::max);
    let (b_lo, b_hi) = share_bounds(&economy.supply, config.price_floor);
    if c.b.is_finite() && (c.b <= b_lo + 1e-12 || c.b >= b_hi - 1e-12) {
        diagnostics.floor_contact = true;
        warnings.push(
            "the reported price sits on the configured price floor; \
             the true optimum may lie on the simplex boundary"
                .into(),
        );
    }
    for i in 0..n {
        let d = marshallian_demand(&economy.utilities[i], c.p.as_slice(), c.m[i], &economy.supply, true);
        if d.multiple {
            warnings.push(format!(
                "consumer {i} has multiple optimal bundles at the reported prices; \
                 the allocation shown is the lexicographically smallest choice"
            ));
        }
    }
    let kind = if potential_value.abs() < config.tol_solve {
        SolutionKind::Walrasian
    } else {
        SolutionKind::Yquilibrium
    };
    EquilibriumResult {
        p: c.p.clone(),
        x,
        m: IncomeDistribution(c.m.clone()),
        utilities: c.inner.u.clone(),
        gaps,
        weights: alpha.to_vec(),
        potential: potential_value,
        kind,
        multiple,
        alternates,
        price_interval,
        diagnostics,
        warnings,
    }
}

fn to_alternate(c: &PriceCandidate) -> Alternate {
    Alternate {
        p: c.p.clone(),
        x: Allocation(c.inner.x.clone()),
        utilities: c.inner.u.clone(),
        potential: c.inner.y,
    }
}

/// The contiguous run of grid indices around `center` whose potential stays
/// within `tol` of `best` (only indices whose candidates exist qualify).
fn grid_run(
    grid: &[Option<PriceCandidate>],
    center: usize,
    best: f64,
    tol: f64,
) -> (usize, usize) {
    let ok = |i: usize| matches!(&grid[i], Some(c) if c.inner.y >= best - tol);
    let (mut lo, mut hi) = (center, center);
    while lo > 0 && ok(lo - 1) {
        lo -= 1;
    }
    while hi + 1 < grid.len() && ok(hi + 1) {
        hi += 1;
    }
    (lo, hi)
}

/// One bisection refinement of a plateau-edge bracket `(bad, good)`, where
/// `good` meets the acceptance threshold and `bad` does not. Returns whether
/// the midpoint passed — which doubles as evidence that the optimum is flat
/// beyond the sampled points, not a sharp peak straddled by two near-equal
/// neighbors.
fn bisect_step(bad: &mut f64, good: &mut f64, passes: &impl Fn(f64) -> bool) -> bool {
    let mid = 0.5 * (*bad + *good);
    if passes(mid) {
        *good = mid;
        true
    } else {
        *bad = mid;
        false
    }
}

// ---------------------------------------------------------------------------
// Walrasian solvers.
// ---------------------------------------------------------------------------

/// Maximize the potential over prices at fixed income shares and report the
/// root.
///
/// The search scans the normalized price segment/simplex on a grid, refines
/// the best cell and a set of seeded random restarts by pattern search, and
/// resolves optimal plateaus to their lexicographically smallest member.
/// Success requires the maximum to vanish (`|Y*| < tol-solve`), which for
/// quasiconcave (or quasiconcavified) utilities is exactly a capped
/// market-clearing equilibrium; a strictly negative maximum means no
/// clearing price exists and comes back as [`SolveError::NoRoot`] carrying
/// the best incumbent.
///
/// Families with price indeterminacy (e.g. `min`-utilities, where every
/// price clears the market) are reported with `multiple = true` and a
/// `price_interval` describing the whole optimal band.
pub fn solve_walrasian_income(
    economy: &Economy,
    config: &SolverConfig,
) -> Result<EquilibriumResult, SolveError> {
    economy.validate()?;
    config.validate()?;
    let incomes = match &economy.ownership {
        Ownership::Incomes(m) => m.clone(),
        Ownership::Endowments(_) => {
            return Err(EconomyError::BadConfig {
                reason: "this solver needs income shares; economies with endowments \
                         go through the endowment fixed-point solver"
                    .into(),
            }
            .into())
        }
    };
    let alpha = vec![1.0; economy.n()];
    let ctx = SearchCtx {
        economy,
        alpha: &alpha,
        incomes: Some(&incomes),
        ir: None,
        extra_seeds: Vec::new(),
        config,
    };
    let result = if economy.k() == 2 {
        assemble_k2(&ctx, &sweep_shares_k2(&ctx)?, false)
    } else {
        assemble_k3(&ctx, &sweep_shares_k3(&ctx)?)
    };
    if result.potential < -config.tol_solve {
        let mut incumbent = result;
        incumbent.warnings.push(format!(
            "no clearing price: the best potential {:.3e} is still negative; either the \
             economy is non-convex or the grid resolution is too coarse",
            incumbent.potential
        ));
        return Err(SolveError::NoRoot { incumbent: Box::new(incumbent) });
    }
    Ok(result)
}

/// Where a contender came from, so plateau bookkeeping can follow it through
/// the dominance screen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Origin {
    /// Pattern-refined optimum.
    Refined,
    /// Grid cell `i` of the price sweep.
    Grid(usize),
    /// Bisected plateau edge.
    Edge,
}

/// Shared two-good assembly: plateau detection, tie collection, and the
/// lexicographic primary pick. `dominance` additionally screens near-optimal
/// candidates for Pareto dominance (Yquilibrium mode).
fn assemble_k2(ctx: &SearchCtx, sweep: &SweepOutcome, dominance: bool) -> EquilibriumResult {
    let cfg = ctx.config;
    let best_y = sweep.best.inner.y;
    let threshold = best_y - EDGE_SLACK * (1.0 + best_y.abs());

    // Candidates in contention: the refined best plus all grid co-optima.
    let mut pool: Vec<(Origin, PriceCandidate)> = vec![(Origin::Refined, sweep.best.clone())];
    for (i, c) in sweep.grid.iter().enumerate() {
        if let Some(c) = c {
            if c.inner.y >= best_y - TIE_EPS {
                pool.push((Origin::Grid(i), c.clone()));
            }
        }
    }

    // Plateau detection. Find the contiguous co-optimal grid run nearest the
    // best and resolve its exact ends — a region boundary or corner solution
    // lives there. A run spanning several grid cells is flat on its face; a
    // single co-optimal cell may still sit inside a plateau narrower than
    // one grid step, so before committing to (or skipping) the full edge
    // resolution, probe two bisection midpoints on each side and take any
    // passing probe as evidence of flatness. Isolated curved optima fail
    // every probe and keep their pattern-refined answer untouched.
    let mut run: Option<(usize, usize)> = None;
    let near_idx = sweep
        .grid
        .iter()
        .enumerate()
        .filter(|(_, c)| matches!(c, Some(c) if c.inner.y >= best_y - TIE_EPS))
        .min_by(|(i, _), (j, _)| {
            let di = (sweep.bs[*i] - sweep.best.b).abs();
            let dj = (sweep.bs[*j] - sweep.best.b).abs();
            di.partial_cmp(&dj).unwrap_or(std::cmp::Ordering::Equal)
        })
        .map(|(i, _)| i);
    let mut edges: Option<(PriceCandidate, PriceCandidate)> = None;
    if let Some(center) = near_idx {
        let (i_lo, i_hi) = grid_run(&sweep.grid, center, best_y, TIE_EPS);
        let passes = |b: f64| matches!(ctx.eval_share(b), Some(c) if c.inner.y >= threshold);
        // Brackets `(outside, inside)` per side; `None` when the run touches
        // the segment boundary and there is no outside to resolve.
        let mut lb = (i_lo > 0).then(|| (sweep.bs[i_lo - 1], sweep.bs[i_lo]));
        let mut rb = (i_hi + 1 < sweep.bs.len()).then(|| (sweep.bs[i_hi + 1], sweep.bs[i_hi]));
        let mut flat = sweep.bs[i_hi] - sweep.bs[i_lo] > 10.0 * cfg.tol_accept;
        if !flat {
            for _ in 0..2 {
                if let Some((bad, good)) = lb.as_mut() {
                    flat |= bisect_step(bad, good, &passes);
                }
                if let Some((bad, good)) = rb.as_mut() {
                    flat |= bisect_step(bad, good, &passes);
                }
            }
        }
        if flat {
            let resolve = |bracket: Option<(f64, f64)>, inside: usize| -> Option<PriceCandidate> {
                match bracket {
                    None => sweep.grid[inside].clone(),
                    Some((mut bad, mut good)) => {
                        for _ in 0..BISECT_ITERS {
                            bisect_step(&mut bad, &mut good, &passes);
                        }
                        ctx.eval_share(good)
                            .filter(|c| c.inner.y >= threshold)
                            .or_else(|| sweep.grid[inside].clone())
                    }
                }
            };
            let left = resolve(lb, i_lo);
            let right = resolve(rb, i_hi);
            if let (Some(l), Some(r)) = (left, right) {
                // The resolved width, not the coarse grid span, decides
                // whether a genuine band is present.
                if (r.b - l.b).abs() > 10.0 * cfg.tol_accept {
                    run = Some((i_lo, i_hi));
                    pool.push((Origin::Edge, l.clone()));
                    pool.push((Origin::Edge, r.clone()));
                    edges = Some((l, r));
                }
            }
        }
    }

    // Optional Pareto-dominance screen over the whole pool. It runs before
    // the band is reported: a plateau whose interior is dominated (all gains
    // from trade concentrate at its corners) is not an optimal band, just a
    // set of isolated optima.
    let survivors: Vec<(Origin, PriceCandidate)> = if dominance {
        let keep = dominance_mask(&pool, cfg.tol_accept);
        pool.into_iter().zip(keep).filter(|(_, k)| *k).map(|(c, _)| c).collect()
    } else {
        pool
    };

    // Report the band only if the whole run, edges included, survived.
    let interval = match (run, edges) {
        (Some((i_lo, i_hi)), Some((l, r))) => {
            let run_intact = (i_lo..=i_hi)
                .all(|i| survivors.iter().any(|(o, _)| *o == Origin::Grid(i)));
            let edges_alive =
                survivors.iter().filter(|(o, _)| *o == Origin::Edge).count() == 2;
            if run_intact && edges_alive {
                Some((l.p, r.p))
            } else {
                None
            }
        }
        _ => None,
    };

    let pool: Vec<PriceCandidate> = survivors.into_iter().map(|(_, c)| c).collect();
    finish_assembly(ctx, pool, best_y, interval, sweep.restarts, sweep.sweeps)
}

fn assemble_k3(ctx: &SearchCtx, sweep: &SweepOutcome) -> EquilibriumResult {
    let best_y = sweep.best.inner.y;
    let mut pool: Vec<PriceCandidate> = vec![sweep.best.clone()];
    for c in sweep.grid.iter().flatten() {
        if c.inner.y >= best_y - TIE_EPS {
            pool.push(c.clone());
        }
    }
    finish_assembly(ctx, pool, best_y, None, sweep.restarts, sweep.sweeps)
}

/// Keep-mask over `pool`: a candidate is dropped when another candidate
/// Pareto-dominates it — some consumer gains more than `tol_accept` while
/// nobody loses more than [`DOM_WEAK`]. Candidates with identical utility
/// vectors all survive. (Domination is irreflexive here by construction:
/// a candidate never beats itself by more than `tol_accept`.)
fn dominance_mask(pool: &[(Origin, PriceCandidate)], tol_accept: f64) -> Vec<bool> {
    let dominated = |c: &PriceCandidate| {
        pool.iter().any(|(_, d)| {
            d.inner.u.iter().zip(&c.inner.u).all(|(du, cu)| *du >= cu - DOM_WEAK)
                && d.inner.u.iter().zip(&c.inner.u).any(|(du, cu)| *du > cu + tol_accept)
        })
    };
    let mask: Vec<bool> = pool.iter().map(|(_, c)| !dominated(c)).collect();
    if mask.iter().any(|k| *k) {
        mask
    } else {
        vec![true; pool.len()]
    }
}

/// Deduplicate, order lexicographically, pick the primary, and package.
fn finish_assembly(
    ctx: &SearchCtx,
    mut pool: Vec<PriceCandidate>,
    best_y: f64,
    interval: Option<(PriceVector, PriceVector)>,
    restarts: usize,
    sweeps: usize,
) -> EquilibriumResult {
    let cfg = ctx.config;
    pool.sort_by(|a, b| {
        if lex_le(&lex_key(a), &lex_key(b)) {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Greater
        }
    });
    let mut distinct: Vec<PriceCandidate> = Vec::new();
    for c in pool {
        if !distinct.iter().any(|d| candidate_distance(&c, d) <= 10.0 * cfg.tol_accept) {
            distinct.push(c);
        }
    }
    // Primary: lexicographically smallest among exact co-optima.
    let primary_idx = distinct
        .iter()
        .position(|c| c.inner.y >= best_y - TIE_EPS)
        .unwrap_or(0);
    let primary = distinct[primary_idx].clone();

    let mut warnings = Vec::new();
    let alternates: Vec<Alternate> = if interval.is_some() {
        // The band description subsumes pointwise listings of its members.
        Vec::new()
    } else {
        distinct
            .iter()
            .enumerate()
            .filter(|(i, c)| *i != primary_idx && c.inner.y >= best_y - cfg.tol_accept)
            .map(|(_, c)| to_alternate(c))
            .collect()
    };
    let multiple = interval.is_some() || !alternates.is_empty();
    if let Some((l, r)) = &interval {
        warnings.push(format!(
            "every price between p = {:?} and p = {:?} is optimal; reporting the \
             lexicographically smallest member of the band",
            l.0, r.0
        ));
    }
    let diagnostics = Diagnostics { iterations: sweeps, restarts, ..Diagnostics::default() };
    package(
        ctx.economy,
        &primary,
        ctx.alpha,
        cfg,
        multiple,
        alternates,
        interval,
        diagnostics,
        warnings,
    )
}

/// Find every income distribution consistent with endowment values.
///
/// For fixed incomes `m`, [`solve_walrasian_income`] produces clearing
/// prices `P(m)`; an endowment economy is in equilibrium when the incomes
/// implied by those prices reproduce themselves, `⟨P(m)|ω_i⟩ = m_i`. This
/// solver scans the income simplex, refines every local minimum of the
/// self-consistency residual, and returns one equilibrium per fixed point
/// (several can exist). Results are sorted by price, lexicographically.
///
/// Errors with [`SolveError::NoRoot`] when no fixed point meets `tol-solve`
/// — with quasiconcave utilities that signals a grid too coarse rather than
/// nonexistence.
pub fn solve_walrasian_endowment(
    economy: &Economy,
    config: &SolverConfig,
) -> Result<Vec<EquilibriumResult>, SolveError> {
    economy.validate()?;
    config.validate()?;
    let omegas = match &economy.ownership {
        Ownership::Endowments(om) => om.clone(),
        Ownership::Incomes(_) => {
            return Err(EconomyError::BadConfig {
                reason: "this solver needs endowments; income economies go through \
                         the income solver directly"
                    .into(),
            }
            .into())
        }
    };
    let n = economy.n();
    let delta = 1e-6;

    // Scanning configuration: cheaper inner solves while sweeping, the full
    // configuration for the final answer at each fixed point.
    let scan_cfg = SolverConfig {
        grid_resolution: config.grid_resolution.min(48),
        multistart_count: 1,
        ..config.clone()
    };

    let with_incomes = |m: &[f64]| -> Economy {
        Economy {
            goods: economy.goods.clone(),
            supply: economy.supply.clone(),
            utilities: economy.utilities.clone(),
            ownership: Ownership::Incomes(m.to_vec()),
        }
    };
    // Clearing prices at fixed incomes; a failed root search still yields
    // its best incumbent price, which keeps the residual well-defined.
    let price_at = |m: &[f64], cfg: &SolverConfig| -> Result<PriceVector, SolveError> {
        match solve_walrasian_income(&with_incomes(m), cfg) {
            Ok(r) => Ok(r.p),
            Err(SolveError::NoRoot { incumbent }) => Ok(incumbent.p),
            Err(e) => Err(e),
        }
    };
    let residual = |m: &[f64], cfg: &SolverConfig| -> Result<f64, SolveError> {
        let p = price_at(m, cfg)?;
        let r = omegas
            .iter()
            .zip(m)
            .map(|(oi, mi)| (dot(p.as_slice(), oi) - mi).abs())
            .fold(0.0, f64::max);
        Ok(r)
    };

    // Grid over the free income coordinates (the last income is forced).
    let res = if n == 2 { config.grid_resolution.max(2) } else { config.grid_resolution.clamp(2, 16) };
    let axis = linspace(delta, 1.0 - (n as f64 - 1.0) * delta, res);
    let mut grid_ms: Vec<Vec<f64>> = Vec::new();
    let mut counters = vec![0usize; n - 1];
    loop {
        let mut m: Vec<f64> = counters.iter().map(|c| axis[*c]).collect();
        let rest = 1.0 - m.iter().sum::<f64>();
        if rest >= delta - 1e-12 {
            m.push(rest);
            grid_ms.push(m);
        }
        let mut d = 0;
        loop {
            counters[d] += 1;
            if counters[d] < axis.len() {
                break;
            }
            counters[d] = 0;
            d += 1;
            if d == n - 1 {
                break;
            }
        }
        if d == n - 1 {
            break;
        }
    }
    let scanned: Vec<(Vec<f64>, f64)> = grid_ms
        .par_iter()
        .map(|m| residual(m, &scan_cfg).map(|r| (m.clone(), r)))
        .collect::<Result<Vec<_>, _>>()?;

    // Local minima of the residual are the starts worth refining.
    let neighbors = |i: usize, j: usize| -> bool {
        let (mi, _) = &scanned[i];
        let (mj, _) = &scanned[j];
        let mut diff = 0;
        for d in 0..n - 1 {
            let steps = ((mi[d] - mj[d]).abs() / (axis[1] - axis[0])).round() as usize;
            diff += steps;
        }
        diff == 1
    };
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for i in 0..scanned.len() {
        let (m, r) = &scanned[i];
        if *r > 0.1 {
            continue;
        }
        let is_min = (0..scanned.len())
            .filter(|j| *j != i && neighbors(i, *j))
            .all(|j| scanned[j].1 >= *r - 1e-15);
        if is_min {
            starts.push(m.clone());
        }
    }
    if starts.is_empty() {
        if let Some((m, _)) = scanned
            .iter()
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
        {
            starts.push(m.clone());
        }
    }

    // Refine each start: compass descent on the residual over free incomes.
    let step0 = axis[1] - axis[0];
    let mut fixed_points: Vec<(Vec<f64>, f64)> = Vec::new();
    for start in starts {
        let mut pos: Vec<f64> = start[..n - 1].to_vec();
        let eval = |pos: &[f64]| -> Option<f64> {
            let rest = 1.0 - pos.iter().sum::<f64>();
            if rest < delta - 1e-12 {
                return None;
            }
            let mut m = pos.to_vec();
            m.push(rest);
            residual(&m, &scan_cfg).ok().map(|r| -r)
        };
        let lo = vec![delta; n - 1];
        let hi = vec![1.0 - delta; n - 1];
        let h0 = vec![step0; n - 1];
        compass_maximize(&eval, &mut pos, &lo, &hi, &h0, 4 * config.refine_iterations.max(64));
        let mut m = pos.clone();
        m.push(1.0 - pos.iter().sum::<f64>());
        let r = residual(&m, config)?;
        if r < config.tol_solve
            && !fixed_points.iter().any(|(f, _)| inf_dist(f, &m) <= 10.0 * config.tol_accept)
        {
            fixed_points.push((m, r));
        }
    }

    if fixed_points.is_empty() {
        // Report the best self-consistency we achieved as the incumbent.
        let (m_best, r_best) = scanned
            .into_iter()
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
            .expect("income grid is never empty");
        let mut incumbent = match solve_walrasian_income(&with_incomes(&m_best), config) {
            Ok(r) => r,
            Err(SolveError::NoRoot { incumbent }) => *incumbent,
            Err(e) => return Err(e),
        };
        incumbent.diagnostics.fixed_point_residual = Some(r_best);
        incumbent.warnings.push(format!(
            "no self-consistent income distribution found (best residual {r_best:.3e}); \
             the configuration is likely too coarse"
        ));
        return Err(SolveError::NoRoot { incumbent: Box::new(incumbent) });
    }

    let mut results = Vec::new();
    for (m, r) in fixed_points {
        let mut eq = match solve_walrasian_income(&with_incomes(&m), config) {
            Ok(eq) => eq,
            Err(SolveError::NoRoot { incumbent }) => {
                let mut inc = *incumbent;
                inc.warnings.push(
                    "the income fixed point has no clearing price at full resolution; \
                     reporting the best incumbent"
                        .into(),
                );
                inc
            }
            Err(e) => return Err(e),
        };
        // Report the incomes the endowments actually imply at these prices.
        let implied = economy.incomes_at(&eq.p);
        eq.diagnostics.fixed_point_residual = Some(r);
        eq.m = IncomeDistribution(implied);
        results.push(eq);
    }
    results.sort_by(|a, b| {
        if lex_le(&a.p.0, &b.p.0) { std::cmp::Ordering::Less } else { std::cmp::Ordering::Greater }
    });
    results.dedup_by(|a, b| {
        inf_dist(&a.p.0, &b.p.0) <= 10.0 * config.tol_accept
            && a.x.0.iter().zip(&b.x.0).all(|(xa, xb)| inf_dist(xa, xb) <= 10.0 * config.tol_accept)
    });
    Ok(results)
}

// ---------------------------------------------------------------------------
// Yquilibrium solver.
// ---------------------------------------------------------------------------

/// Maximize the potential over prices *and* allocations for an endowment
/// economy, with unit welfare weights.
///
/// The maximizer is constrained to allocations that are individually
/// rational (`u_i(x_i) ≥ u_i(ω_i)`) and budget-exact at the candidate
/// prices, and near-optimal candidates are screened for Pareto dominance so
/// that only undominated outcomes are reported. The winner is additionally
/// cross-checked against an independent grid search for feasible Pareto
/// improvements consistent with linear pricing; a failed check reruns the
/// price search with dominance as a hard constraint, which can land strictly
/// below the unconstrained maximum (a warning notes the promotion, or the
/// grid coarseness when nothing undominated is found at all).
///
/// The maximum is `0` exactly when a (capped) Walrasian equilibrium exists —
/// then this returns it, `kind = walrasian` — and strictly negative
/// otherwise, in which case the maximizer is still the best
/// individually-rational, undominated outcome the price system supports.
pub fn solve_yquilibrium(
    economy: &Economy,
    config: &SolverConfig,
) -> Result<EquilibriumResult, SolveError> {
    let alpha = vec![1.0; economy.n()];
    solve_yquilibrium_weighted(economy, &alpha, config)
}

/// [`solve_yquilibrium`] with explicit positive welfare weights. Equal
/// weights rescale the potential without moving the maximizer; genuinely
/// different weights can move it, which is the point of exposing them.
pub fn solve_yquilibrium_weighted(
    economy: &Economy,
    alpha: &[f64],
    config: &SolverConfig,
) -> Result<EquilibriumResult, SolveError> {
    economy.validate()?;
    config.validate()?;
    let n = economy.n();
    if alpha.len() != n {
        return Err(EconomyError::DimensionMismatch {
            what: "weight vector length".into(),
            expected: n,
            got: alpha.len(),
        }
        .into());
    }
    if let Some(a) = alpha.iter().find(|a| !(**a > 0.0)) {
        return Err(EconomyError::BadConfig {
            reason: format!("welfare weights must be strictly positive, got {a}"),
        }
        .into());
    }
    let omegas = match &economy.ownership {
        Ownership::Endowments(om) => om.clone(),
        Ownership::Incomes(_) => {
            return Err(EconomyError::BadConfig {
                reason: "this solver compares outcomes against standing pat, so it \
                         needs endowments, not income shares"
                    .into(),
            }
            .into())
        }
    };
    let k = economy.k();
    let ir: Vec<f64> = omegas.iter().enumerate().map(|(i, oi)| economy.utility(i, oi)).collect();
    // Endowment positions are budget-exact at every price — always a
    // feasible, individually rational inner seed.
    let omega_seed: Vec<f64> = omegas[..n - 1]
        .iter()
        .flat_map(|oi| oi[..k - 1].iter().copied())
        .collect();
    let ctx = SearchCtx {
        economy,
        alpha,
        incomes: None,
        ir: Some(ir),
        extra_seeds: vec![omega_seed],
        config,
    };
    let sweep = if k == 2 { sweep_shares_k2(&ctx)? } else { sweep_shares_k3(&ctx)? };
    let mut result =
        if k == 2 { assemble_k2(&ctx, &sweep, true) } else { assemble_k3(&ctx, &sweep) };

    // Independent cross-check: scan for a feasible Pareto improvement over
    // the winner that is itself consistent with linear prices. Finding one
    // means the unconstrained maximizer concentrates at a dominated point —
    // rebuild the answer from the sweep with dominance as a hard constraint.
    let improvement = crate::oracle::pareto_improvement_search(
        economy,
        &result.x,
        CROSS_CHECK_RES,
        true,
        config.tol_accept,
    )?;
    if improvement.is_some() {
        if let Some(promoted) = promote_undominated(&ctx, &sweep) {
            result = promoted;
        } else {
            result.warnings.push(
                "a dominance cross-check found a feasible Pareto improvement over every \
                 reported candidate; the grid resolution may be too coarse for this economy"
                    .into(),
            );
        }
    }
    Ok(result)
}

/// Rebuild the answer from a finished price sweep with Pareto dominance as a
/// hard constraint.
///
/// The unconstrained potential maximum can sit at a dominated allocation
/// (typically an autarky-like point protected by the individual-rationality
/// floors), while the best *undominated* outcome lives strictly below it in
/// potential — usually pinned against the price where the rationality floor
/// starts binding. Walking near-ties of the unconstrained maximum can never
/// reach such a point, so instead: rank everything the sweep saw by
/// potential, keep the best candidate whose allocation survives the
/// independent improvement scan, and pattern-refine the price from there
/// with dominated prices treated as infeasible. The refinement walks up to
/// the constraint boundary and converges on it.
fn promote_undominated(ctx: &SearchCtx, sweep: &SweepOutcome) -> Option<EquilibriumResult> {
    let cfg = ctx.config;
    let economy = ctx.economy;
    let k = economy.k();
    let undominated = |c: &PriceCandidate| {
        matches!(
            crate::oracle::pareto_improvement_search(
                economy,
                &Allocation(c.inner.x.clone()),
                CROSS_CHECK_RES,
                true,
                cfg.tol_accept,
            ),
            Ok(None)
        )
    };

    // Deterministic ranking of everything the sweep evaluated: potential
    // first, lexicographic `(p, x)` on ties.
    let mut ranked: Vec<&PriceCandidate> =
        std::iter::once(&sweep.best).chain(sweep.grid.iter().flatten()).collect();
    ranked.sort_by(|a, b| match b.inner.y.partial_cmp(&a.inner.y) {
        Some(std::cmp::Ordering::Equal) | None => {
            if lex_le(&lex_key(a), &lex_key(b)) {
                std::cmp::Ordering::Less
            } else {
                std::cmp::Ordering::Greater
            }
        }
        Some(ord) => ord,
    });
    let seed_idx = ranked.iter().position(|c| undominated(c))?;
    let seed: PriceCandidate = ranked[seed_idx].clone();

    // Constrained pattern refinement from the seed: same search spaces as
    // the sweeps, with dominated candidates evaluating as infeasible.
    let refined: Option<PriceCandidate> = if k == 2 {
        let (b_lo, b_hi) = share_bounds(&economy.supply, cfg.price_floor);
        let step = if sweep.bs.len() >= 2 {
            sweep.bs[1] - sweep.bs[0]
        } else {
            0.5 * (b_hi - b_lo)
        };
        let checked = |b: f64| ctx.eval_share(b).filter(|c| undominated(c));
        let eval = |pos: &[f64]| checked(pos[0]).map(|c| c.inner.y);
        let mut pos = vec![seed.b];
        compass_maximize(&eval, &mut pos, &[b_lo], &[b_hi], &[step], cfg.refine_iterations.max(64));
        checked(pos[0])
    } else {
        let supply = &economy.supply;
        let res = cfg.grid_resolution.clamp(2, 24);
        let floor_share: Vec<f64> = supply.iter().map(|w| cfg.price_floor * w).collect();
        let lo: Vec<f64> = floor_share[..k - 1].to_vec();
        let hi: Vec<f64> = (0..k - 1)
            .map(|j| {
                1.0 - floor_share[j + 1..].iter().sum::<f64>()
                    - floor_share[..j].iter().sum::<f64>()
            })
            .collect();
        let price_at = |s: &[f64]| -> Option<PriceVector> {
            let last = 1.0 - s.iter().sum::<f64>();
            if last < floor_share[k - 1] {
                return None;
            }
            let mut raw: Vec<f64> = s.iter().zip(supply).map(|(sj, w)| sj / w).collect();
            raw.push(last / supply[k - 1]);
            Some(PriceVector(raw))
        };
        let checked = |s: &[f64]| {
            price_at(s).and_then(|p| ctx.eval_price(&p, f64::NAN)).filter(|c| undominated(c))
        };
        let eval = |s: &[f64]| checked(s).map(|c| c.inner.y);
        let mut pos: Vec<f64> =
            seed.p.0.iter().zip(supply).map(|(p, w)| p * w).take(k - 1).collect();
        let h0 = vec![1.0 / res as f64; k - 1];
        compass_maximize(&eval, &mut pos, &lo, &hi, &h0, cfg.refine_iterations.max(64));
        checked(&pos)
    };
    let winner = match refined {
        Some(c) if c.inner.y >= seed.inner.y - FLAT_SLACK * (1.0 + seed.inner.y.abs()) => c,
        _ => seed,
    };
    let best_y = winner.inner.y;

    // Undominated near-ties of the promoted winner become alternates through
    // the usual assembly. Everything ranked above the seed is dominated by
    // construction, so only the tail needs checking.
    let mut pool: Vec<PriceCandidate> = vec![winner];
    for c in ranked[seed_idx + 1..]
        .iter()
        .take_while(|c| c.inner.y >= best_y - cfg.tol_accept)
        .filter(|c| undominated(c))
    {
        pool.push((*c).clone());
    }
    let mut result = finish_assembly(ctx, pool, best_y, None, sweep.restarts, sweep.sweeps);
    result.warnings.push(
        "the unconstrained potential maximizer admitted a dominating trade at linear \
         prices; reporting the best undominated candidate instead"
            .into(),
    );
    Some(result)
}

// ---------------------------------------------------------------------------
// Dual welfare minimization (welfare-weight iteration).
// ---------------------------------------------------------------------------

/// Minimize `Σ_i α_i·v_i(p, m_i)` over normalized prices `⟨p|supply⟩ = Σm`,
/// with *unrestricted* indirect utilities (the classical dual of utilitarian
/// welfare, whose scope is smooth convex economies).
///
/// Returns the minimizing prices and the minimum. Precision is pattern-search
/// grade (~1e-12 in the price coordinates), good enough to differentiate the
/// minimum value numerically — which is how the envelope identity
/// "gradient with respect to supply equals the clearing prices" is tested.
pub fn dual_welfare_minimum(
    utilities: &[crate::economy::Utility],
    alpha: &[f64],
    incomes: &[f64],
    supply: &[f64],
    floor: f64,
) -> (PriceVector, f64) {
    let scale: f64 = incomes.iter().sum();
    let objective = |p_hat: &PriceVector| -> f64 {
        let q: Vec<f64> = p_hat.0.iter().map(|v| v * scale).collect();
        utilities
            .iter()
            .zip(alpha)
            .zip(incomes)
            .map(|((u, a), m)| a * indirect_utility(u, &q, *m, supply, false))
            .sum()
    };
    let (p_hat, value) = minimize_over_prices(&objective, supply, floor);
    (PriceVector(p_hat.0.iter().map(|v| v * scale).collect()), value)
}

/// Scan-plus-pattern minimizer over the normalized price simplex.
fn minimize_over_prices(
    objective: &dyn Fn(&PriceVector) -> f64,
    supply: &[f64],
    floor: f64,
) -> (PriceVector, f64) {
    let k = supply.len();
    if k == 2 {
        let (b_lo, b_hi) = share_bounds(supply, floor);
        let eval = |pos: &[f64]| -> Option<f64> {
            Some(-objective(&price_from_share(pos[0], supply)))
        };
        let grid = linspace(b_lo, b_hi, DUAL_SCAN_RES);
        let mut best_b = grid[0];
        let mut best = f64::NEG_INFINITY;
        for b in &grid {
            let v = eval(&[*b]).unwrap();
            if v > best {
                best = v;
                best_b = *b;
            }
        }
        let mut pos = vec![best_b];
        let step = (b_hi - b_lo) / (DUAL_SCAN_RES - 1) as f64;
        compass_maximize(&eval, &mut pos, &[b_lo], &[b_hi], &[step], 200);
        let p = price_from_share(pos[0], supply);
        let v = objective(&p);
        (p, v)
    } else {
        let res = 24;
        let grid = price_grid(supply, res, floor);
        let mut best_p = grid[0].clone();
        let mut best = f64::INFINITY;
        for p in &grid {
            let v = objective(p);
            if v < best {
                best = v;
                best_p = p.clone();
            }
        }
        let floor_share: Vec<f64> = supply.iter().map(|w| floor * w).collect();
        let mut pos: Vec<f64> =
            best_p.0.iter().zip(supply).map(|(p, w)| p * w).take(k - 1).collect();
        let eval = |s: &[f64]| -> Option<f64> {
            let last = 1.0 - s.iter().sum::<f64>();
            if last < floor_share[k - 1] {
                return None;
            }
            let mut raw: Vec<f64> = s.iter().zip(supply).map(|(sj, w)| sj / w).collect();
            raw.push(last / supply[k - 1]);
            Some(-objective(&PriceVector(raw)))
        };
        let lo = floor_share[..k - 1].to_vec();
        let hi = vec![1.0; k - 1];
        let h0 = vec![1.0 / res as f64; k - 1];
        compass_maximize(&eval, &mut pos, &lo, &hi, &h0, 200);
        let last = 1.0 - pos.iter().sum::<f64>();
        let mut raw: Vec<f64> = pos.iter().zip(supply).map(|(sj, w)| sj / w).collect();
        raw.push(last / supply[k - 1]);
        let p = PriceVector(raw);
        let v = objective(&p);
        (p, v)
    }
}

/// Alternate welfare weights against dual-welfare price minimization until
/// the prices settle.
///
/// Each round values incomes at the current prices (given shares, or
/// endowment values — both supported), sets the weights to the inverse
/// marginal utilities of income `α_i = 1/(∂v_i/∂m_i)`, and minimizes the
/// weighted dual welfare `Σ α_i v_i(p, m_i)` over the price simplex. At a
/// fixed point the minimizing prices clear the market, so this is a purely
/// price-side route to equilibrium for smooth convex economies. Steps that
/// grow are damped by half to tame oscillation.
///
/// Fails with [`SolveError::NoConverge`] (carrying the full trace) when the
/// prices keep moving after 100 rounds, and propagates weight-computation
/// errors for families whose marginal utility of income degenerates.
pub fn dual_negishi_minimize(
    economy: &Economy,
    config: &SolverConfig,
) -> Result<NegishiOutcome, SolveError> {
    economy.validate()?;
    config.validate()?;
    let k = economy.k();
    let supply = &economy.supply;
    let mut p = normalize_prices(&vec![1.0; k], supply)?;
    let mut trace: Vec<NegishiStep> = Vec::new();
    let mut prev_move = f64::INFINITY;

    for iter in 1..=NEGISHI_MAX_ITERS {
        let m = economy.incomes_at(&p);
        let alpha = negishi_weights(&economy.utilities, &p, &m)?;
        let objective = |q: &PriceVector| -> f64 {
            let mq = economy.incomes_at(q);
            economy
                .utilities
                .iter()
                .zip(&alpha)
                .zip(&mq)
                .map(|((u, a), mi)| a * indirect_utility(u, q.as_slice(), *mi, supply, false))
                .sum()
        };
        let (p_new, value) = minimize_over_prices(&objective, supply, config.price_floor);
        trace.push(NegishiStep { p: p_new.clone(), weights: alpha.clone(), value });
        let delta = inf_dist(&p_new.0, &p.0);
        if delta < config.tol_solve {
            let m_fin = economy.incomes_at(&p_new);
            let mut warnings = Vec::new();
            let mut total = vec![0.0; k];
            let mut nonunique = false;
            for (i, u) in economy.utilities.iter().enumerate() {
                let d = marshallian_demand(u, p_new.as_slice(), m_fin[i], supply, true);
                nonunique |= d.multiple;
                for j in 0..k {
                    total[j] += d.x[j];
                }
            }
            let clearing = total
                .iter()
                .zip(supply)
                .map(|(t, w)| (t - w).abs())
                .fold(0.0, f64::max);
            if clearing > config.tol_accept {
                warnings.push(format!(
                    "optimal demands at the converged prices leave a market-clearing \
                     residual of {clearing:.3e}; the weight iteration is only \
                     trustworthy for smooth convex economies"
                ));
            }
            if nonunique {
                warnings.push(
                    "some consumer's optimal bundle is not unique at the converged \
                     prices; the clearing check used the lexicographically smallest"
                        .into(),
                );
            }
            return Ok(NegishiOutcome {
                p: p_new,
                weights: alpha,
                value,
                iterations: iter,
                trace,
                clearing_residual: clearing,
                warnings,
            });
        }
        // Damp growing steps to half the movement; contracting steps pass
        // through untouched.
        p = if delta > prev_move {
            normalize_prices(
                &p.0.iter().zip(&p_new.0).map(|(a, b)| 0.5 * (a + b)).collect::<Vec<_>>(),
                supply,
            )?
        } else {
            p_new
        };
        prev_move = delta;
    }

    let value = trace.last().map(|s| s.value).unwrap_or(f64::NAN);
    let weights = trace.last().map(|s| s.weights.clone()).unwrap_or_default();
    let outcome = NegishiOutcome {
        p,
        weights,
        value,
        iterations: NEGISHI_MAX_ITERS,
        trace,
        clearing_residual: f64::NAN,
        warnings: vec!["prices were still moving when the iteration cap was reached".into()],
    };
    Err(SolveError::NoConverge { iterations: NEGISHI_MAX_ITERS, outcome: Box::new(outcome) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::economies::{
        cobb_douglas_pair, cobb_douglas_pair_price, fenchel_pair, fenchel_pair_price,
        fenchel_pair_with_incomes, leontief_pair, mixed_pair, mixed_pair_reference,
        single_minded_trio, ticket_traders,
    };
    use crate::economy::Utility;
    use approx::assert_abs_diff_eq;

    const SQ3: f64 = 1.732_050_807_568_877_2;

    fn cd_income_pair(m1: f64) -> Economy {
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

    #[test]
    fn potential_vanishes_at_the_flat_family_root_and_scales_with_weights() {
        let economy = fenchel_pair();
        let [p1, p2] = fenchel_pair_price();
        let p = PriceVector(vec![p1, p2]);
        let x11 = (3.0 - SQ3) / 4.0;
        let x = Allocation(vec![vec![x11, 1.0], vec![1.0 - x11, 0.0]]);
        let y1 = potential(&economy, &x, &p, &[1.0, 1.0]).unwrap();
        assert!(y1.abs() < 1e-6, "potential at the root: {y1}");
        let y2 = potential(&economy, &x, &p, &[2.0, 2.0]).unwrap();
        assert_abs_diff_eq!(y2, 2.0 * y1, epsilon = 1e-12);
    }

    #[test]
    fn potential_is_nonpositive_at_random_budget_exact_points() {
        use rand::Rng;
        let economy = cd_income_pair(0.4);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let b = rng.random_range(0.05..0.95);
            let p = price_from_share(b, &economy.supply);
            let m = [0.4, 0.6];
            let Some((lo, hi)) = budget_segment(p.as_slice(), m[0], &economy.supply) else {
                continue;
            };
            let x11: f64 = rng.random_range(lo..=hi);
            let x12 = (m[0] - p.0[0] * x11) / p.0[1];
            let x = Allocation(vec![vec![x11, x12], vec![1.0 - x11, 1.0 - x12]]);
            if !x.is_feasible(&economy.supply, 1e-12) {
                continue;
            }
            let y = potential(&economy, &x, &p, &[1.0, 1.0]).unwrap();
            assert!(y <= 1e-9, "positive potential {y} at b={b}, x11={x11}");
        }
    }

    #[test]
    fn income_solver_pins_the_smooth_pair() {
        let economy = cd_income_pair(0.3);
        let r = solve_walrasian_income(&economy, &SolverConfig::default()).unwrap();
        // Clearing requires p = (2·m1 + m2)/3 for these exponent choices.
        assert_abs_diff_eq!(r.p.0[0], 1.3 / 3.0, epsilon = 1e-4);
        assert!(r.potential.abs() < 1e-6);
        assert_eq!(r.kind, SolutionKind::Walrasian);
        // Consumer 1 spends 2/3 of income on the first good.
        assert_abs_diff_eq!(r.x.0[0][0], 0.2 / (1.3 / 3.0), epsilon = 1e-3);
        assert!(r.gaps.iter().all(|g| *g >= -1e-9));
        assert!(r.diagnostics.clearing_residual < 1e-9);
        assert!(r.diagnostics.budget_residual < 1e-9);
        assert!(!r.multiple);
    }

    #[test]
    fn income_solver_resolves_flat_budget_plateaus() {
        let economy = fenchel_pair();
        let r = solve_walrasian_income(&economy, &SolverConfig::default()).unwrap();
        let [p1, _] = fenchel_pair_price();
        assert_abs_diff_eq!(r.p.0[0], p1, epsilon = 1e-3);
        assert!(r.potential.abs() < 1e-6, "potential {}", r.potential);
        assert_eq!(r.kind, SolutionKind::Walrasian);
        // Lexicographically smallest point of the indifferent segment.
        assert_abs_diff_eq!(r.x.0[0][0], (3.0 - SQ3) / 4.0, epsilon = 1e-4);
        assert_abs_diff_eq!(r.x.0[0][1], 1.0, epsilon = 1e-6);
        // The whole segment is optimal, so demand is non-unique: warned.
        assert!(r.warnings.iter().any(|w| w.contains("multiple optimal bundles")));
    }

    #[test]
    fn income_solver_reports_full_price_multiplicity() {
        let economy = leontief_pair();
        let r = solve_walrasian_income(&economy, &SolverConfig::default()).unwrap();
        assert!(r.multiple);
        let (lo, hi) = r.price_interval.as_ref().expect("interval expected");
        assert!(lo.0[0] <= 2e-6, "interval start {:?}", lo.0);
        assert!(hi.0[0] >= 1.0 - 2e-6, "interval end {:?}", hi.0);
        // Primary = the band's lexicographically smallest price.
        assert!(r.p.0[0] <= 2e-6);
        for xi in &r.x.0 {
            assert_abs_diff_eq!(xi[0], 0.5, epsilon = 1e-9);
            assert_abs_diff_eq!(xi[1], 0.5, epsilon = 1e-9);
        }
        assert_eq!(r.kind, SolutionKind::Walrasian);
        assert!(r.diagnostics.floor_contact);
    }

    #[test]
    fn income_solver_finds_corner_equilibrium_bands() {
        // Away from equal incomes the optimal bundles sit on the supply box
        // boundary and a whole band of prices clears the market: from the
        // price making consumer 1's budget line an indifference line
        // (p² = 4·m1·q) to the one doing the same for consumer 2.
        let m1 = 0.4;
        let economy = fenchel_pair_with_incomes(m1);
        let r = solve_walrasian_income(&economy, &SolverConfig::default()).unwrap();
        let p_left = -2.0 * m1 + 2.0 * (m1 * m1 + m1).sqrt();
        let m2 = 1.0 - m1;
        let p_right = -2.0 * m2 + 2.0 * (m2 * m2 + m2).sqrt();
        assert!(r.potential.abs() < 1e-6);
        assert_eq!(r.kind, SolutionKind::Walrasian);
        assert!(r.multiple);
        let (lo, hi) = r.price_interval.as_ref().expect("price band expected");
        assert_abs_diff_eq!(lo.0[0], p_left, epsilon = 1e-5);
        assert_abs_diff_eq!(hi.0[0], p_right, epsilon = 1e-5);
        // Primary = the band's smallest price; consumer 1 takes the whole
        // supply of the second good there.
        assert_abs_diff_eq!(r.p.0[0], p_left, epsilon = 1e-5);
        assert_abs_diff_eq!(r.x.0[0][0], (m1 - (1.0 - p_left)) / p_left, epsilon = 1e-4);
        assert_abs_diff_eq!(r.x.0[0][1], 1.0, epsilon = 1e-9);
    }

    fn mixed_income_pair(m1: f64) -> Economy {
        Economy {
            goods: vec!["x".into(), "y".into()],
            supply: vec![1.0, 1.0],
            utilities: vec![
                Utility::CobbDouglas { exponents: vec![2.0 / 3.0, 1.0 / 3.0] },
                Utility::MaxLinear { coefficients: vec![2.0, 1.0] },
            ],
            ownership: Ownership::Incomes(vec![m1, 1.0 - m1]),
        }
    }

    #[test]
    fn income_solver_reports_no_root_with_the_best_incumbent() {
        // With an all-or-nothing consumer, clearing configurations exist only
        // while the smooth consumer's income stays below 3/5 of the total;
        // above that no price equates demand and supply.
        let economy = mixed_income_pair(0.7);
        match solve_walrasian_income(&economy, &SolverConfig::default()) {
            Err(SolveError::NoRoot { incumbent }) => {
                assert!(incumbent.potential < -1e-4, "potential {}", incumbent.potential);
                assert!(incumbent.potential > -1.0);
                assert_eq!(incumbent.kind, SolutionKind::Yquilibrium);
                assert!(incumbent.warnings.iter().any(|w| w.contains("no clearing price")));
            }
            other => panic!("expected NoRoot, got {other:?}"),
        }
        // Just below the threshold the root exists.
        let ok = solve_walrasian_income(&mixed_income_pair(0.55), &SolverConfig::default()).unwrap();
        assert!(ok.potential.abs() < 1e-6);
        assert_abs_diff_eq!(ok.p.0[0], 1.0 - 0.55 / 3.0, epsilon = 1e-4);
    }

    #[test]
    fn endowment_solver_matches_the_closed_form_price() {
        let omega1 = [0.2, 0.5];
        let economy = cobb_douglas_pair(omega1);
        let results = solve_walrasian_endowment(&economy, &SolverConfig::default()).unwrap();
        assert!(!results.is_empty());
        let expect = cobb_douglas_pair_price(omega1);
        let hit = results
            .iter()
            .find(|r| (r.p.0[0] - expect).abs() < 1e-3)
            .expect("closed-form price among the fixed points");
        assert_eq!(hit.kind, SolutionKind::Walrasian);
        let r = hit.diagnostics.fixed_point_residual.expect("fixed-point residual");
        assert!(r < 1e-6);
        // Incomes are the endowment values at the reported prices.
        let implied = economy.incomes_at(&hit.p);
        assert_abs_diff_eq!(hit.m.0[0], implied[0], epsilon = 1e-12);
    }

    #[test]
    fn endowment_solver_reduces_to_income_solver_on_diagonal_endowments() {
        let m = [0.25, 0.75];
        let diag = Economy {
            goods: vec!["x".into(), "y".into()],
            supply: vec![1.0, 1.0],
            utilities: vec![
                Utility::CobbDouglas { exponents: vec![1.0, 0.5] },
                Utility::CobbDouglas { exponents: vec![0.5, 1.0] },
            ],
            ownership: Ownership::Endowments(vec![vec![0.25, 0.25], vec![0.75, 0.75]]),
        };
        let from_endow = solve_walrasian_endowment(&diag, &SolverConfig::default()).unwrap();
        assert_eq!(from_endow.len(), 1);
        let from_income = solve_walrasian_income(&cd_income_pair(m[0]), &SolverConfig::default()).unwrap();
        assert_abs_diff_eq!(from_endow[0].p.0[0], from_income.p.0[0], epsilon = 1e-6);
        for (xa, xb) in from_endow[0].x.0.iter().zip(&from_income.x.0) {
            assert!(inf_dist(xa, xb) < 1e-6);
        }
    }

    #[test]
    fn weight_iteration_converges_for_fixed_incomes() {
        let economy = cd_income_pair(0.3);
        let out = dual_negishi_minimize(&economy, &SolverConfig::default()).unwrap();
        assert_abs_diff_eq!(out.p.0[0], 1.3 / 3.0, epsilon = 1e-4);
        assert!(out.clearing_residual < 1e-3, "clearing {}", out.clearing_residual);
        assert!(out.weights.iter().all(|a| *a > 0.0));
        assert!(!out.trace.is_empty());
    }

    #[test]
    fn weight_iteration_values_endowments_at_each_step() {
        let omega1 = [0.25, 0.65];
        let economy = cobb_douglas_pair(omega1);
        let out = dual_negishi_minimize(&economy, &SolverConfig::default()).unwrap();
        assert_abs_diff_eq!(out.p.0[0], cobb_douglas_pair_price(omega1), epsilon = 1e-3);
    }

    #[test]
    fn dual_welfare_gradient_with_respect_to_supply_is_the_price() {
        // Envelope identity: at the converged weights, differentiating the
        // minimized dual welfare in the supply reproduces the prices.
        let economy = cd_income_pair(0.4);
        let out = dual_negishi_minimize(&economy, &SolverConfig::default()).unwrap();
        let incomes = [0.4, 0.6];
        let h = 1e-3;
        for good in 0..2 {
            let mut up = economy.supply.clone();
            up[good] += h;
            let mut dn = economy.supply.clone();
            dn[good] -= h;
            let (_, w_up) = dual_welfare_minimum(&economy.utilities, &out.weights, &incomes, &up, 1e-6);
            let (_, w_dn) = dual_welfare_minimum(&economy.utilities, &out.weights, &incomes, &dn, 1e-6);
            let grad = (w_up - w_dn) / (2.0 * h);
            // More supply pushes normalized prices down and every indirect
            // utility up; at the converged weights the rate is the price.
            assert_abs_diff_eq!(grad, out.p.0[good], epsilon = 1e-2);
        }
    }

    #[test]
    fn joint_solver_reproduces_the_walrasian_root_in_smooth_economies() {
        let omega1 = [0.2, 0.5];
        let economy = cobb_douglas_pair(omega1);
        let r = solve_yquilibrium(&economy, &SolverConfig::default()).unwrap();
        assert_abs_diff_eq!(r.p.0[0], cobb_douglas_pair_price(omega1), epsilon = 1e-3);
        assert!(r.potential.abs() < 1e-6);
        assert_eq!(r.kind, SolutionKind::Walrasian);
    }

    #[test]
    fn joint_solver_finds_the_interior_nonconvex_optimum() {
        let omega1 = [0.9, 0.3];
        let reference = mixed_pair_reference(omega1);
        assert_eq!(reference.regime, 3);
        let economy = mixed_pair(omega1);
        let r = solve_yquilibrium(&economy, &SolverConfig::default()).unwrap();
        assert_abs_diff_eq!(r.p.0[0], reference.p1, epsilon = 1e-3);
        assert_abs_diff_eq!(r.x.0[0][0], reference.x1[0], epsilon = 1e-3);
        assert_abs_diff_eq!(r.x.0[0][1], reference.x1[1], epsilon = 1e-3);
        // Best utility consumer 1 can reach short of clearing: the gap is real.
        let expect_y = 0.55f64.powf(2.0 / 3.0) - 0.7;
        assert_abs_diff_eq!(r.potential, expect_y, epsilon = 1e-4);
        assert_eq!(r.kind, SolutionKind::Yquilibrium);
        // Individually rational by construction.
        let omegas = economy.endowments().unwrap();
        for (i, xi) in r.x.0.iter().enumerate() {
            assert!(economy.utility(i, xi) >= economy.utility(i, &omegas[i]) - 1e-9);
        }
    }

    #[test]
    fn joint_solver_resolves_price_plateaus_to_their_left_edge() {
        let omega1 = [0.5, 0.5];
        let reference = mixed_pair_reference(omega1);
        assert_eq!(reference.regime, 1);
        let economy = mixed_pair(omega1);
        let r = solve_yquilibrium(&economy, &SolverConfig::default()).unwrap();
        // A whole band of prices is optimal; the reported point is its lower
        // edge, where the closed form puts the equilibrium.
        assert_abs_diff_eq!(r.p.0[0], reference.p1, epsilon = 1e-4);
        assert_abs_diff_eq!(r.x.0[0][0], reference.x1[0], epsilon = 1e-4);
        assert_abs_diff_eq!(r.x.0[0][1], 1.0, epsilon = 1e-9);
        assert!(r.potential.abs() < 1e-6);
        assert_eq!(r.kind, SolutionKind::Walrasian);
        assert!(r.multiple);
        assert!(r.price_interval.is_some());
    }

    #[test]
    fn joint_solver_breaks_plateau_ties_by_dominance() {
        let economy = ticket_traders();
        let r = solve_yquilibrium(&economy, &SolverConfig::default()).unwrap();
        // Only the two all-in corner trades are undominated; the reported one
        // is the lexicographically smaller, the other shows as an alternate.
        assert_abs_diff_eq!(r.p.0[0], 1.0 / 9.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r.p.0[1], 2.0 / 9.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r.x.0[0][0], 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r.x.0[0][1], 3.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r.utilities[0], 3.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r.utilities[1], 3.0, epsilon = 1e-6);
        assert!(r.potential.abs() < 1e-6);
        assert_eq!(r.kind, SolutionKind::Walrasian);
        assert!(
            r.alternates.iter().any(|a| (a.p.0[0] - 2.0 / 9.0).abs() < 1e-3),
            "expected the mirror corner among alternates: {:?}",
            r.alternates.iter().map(|a| a.p.0[0]).collect::<Vec<_>>()
        );
    }

    #[test]
    fn joint_solver_handles_three_consumers() {
        let economy = single_minded_trio();
        let r = solve_yquilibrium(&economy, &SolverConfig::default()).unwrap();
        assert_abs_diff_eq!(r.p.0[0], 1.0 / 3.0, epsilon = 1e-3);
        let expect_x = [[0.3, 0.0], [0.0, 0.5], [0.7, 0.5]];
        for (xi, ei) in r.x.0.iter().zip(&expect_x) {
            assert!(inf_dist(xi, ei) < 1e-3, "allocation {xi:?} vs {ei:?}");
        }
        assert_abs_diff_eq!(r.potential, -1.0 / 15.0, epsilon = 1e-4);
        assert_eq!(r.kind, SolutionKind::Yquilibrium);
    }

    #[test]
    fn equal_weight_scaling_moves_the_potential_not_the_argmax() {
        let omega1 = [0.8, 0.2];
        let economy = mixed_pair(omega1);
        let base = solve_yquilibrium(&economy, &SolverConfig::default()).unwrap();
        let scaled =
            solve_yquilibrium_weighted(&economy, &[2.0, 2.0], &SolverConfig::default()).unwrap();
        assert_abs_diff_eq!(scaled.p.0[0], base.p.0[0], epsilon = 1e-6);
        assert_abs_diff_eq!(scaled.potential, 2.0 * base.potential, epsilon = 1e-9);
    }
}
