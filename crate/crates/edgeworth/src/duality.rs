//! Indirect utility, demand, and the passage between a direct utility and
//! its quasiconcave envelope.
//!
//! The central object is the *box-restricted indirect utility*
//! `v̄(p, m) = max { u(x) : ⟨p|x⟩ = m, 0 ≤ x ≤ w }`: the best utility money
//! `m` buys at prices `p` when no more than the aggregate supply of any good
//! can be bought. Minimizing `v̄(p, ⟨p|x⟩)` over normalized prices recovers
//! the smallest quasiconcave function above `u` on the box — the envelope
//! that [`Utility::Quasiconcavified`] evaluates.
//!
//! Closed forms are used for the families that have them; the kinked and
//! user-defined families fall back to a dense scan of the budget slice with
//! a zooming refinement, which handles optima at kinks and segment endpoints
//! exactly because scan grids always include their endpoints.

use crate::economy::{Bundle, EconomyError, PriceVector, Quasiconcavified, Utility, dot};
use crate::prices::{budget_segment, lex_le, linspace, price_from_share, price_grid, share_bounds};

/// Price floor for the envelope's inner minimization. The envelope's
/// defining infimum can sit on the price-simplex boundary (e.g. at bundles
/// where the inner utility vanishes), and the restricted indirect utility
/// stays bounded there, so the floor can be far below the solver's: its only
/// job is to keep the share parameterization non-degenerate. The residual
/// envelope error at boundary-pinched bundles scales like a fractional power
/// of this floor, so 1e-12 keeps fixed-point error near 1e-4 or better.
const FLOOR: f64 = 1e-12;

/// Scan density for the numeric fallbacks. With three zooming rescans this
/// resolves smooth optima to ~1e-10 of the segment and kink optima exactly.
const SCAN_RES: usize = 257;

/// A utility-maximizing bundle on a budget slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Demand {
    /// The lexicographically smallest maximizer found.
    pub x: Bundle,
    /// True when the maximizer is not unique (a tie between kink branches or
    /// a flat stretch of the objective), in which case `x` is one canonical
    /// choice among many.
    pub multiple: bool,
}

// ---------------------------------------------------------------------------
// Indirect utility
// ---------------------------------------------------------------------------

/// `max u(x)` subject to `⟨p|x⟩ = m` and `x ≥ 0`; with `restricted` also
/// `x ≤ supply`. Prices must be nonnegative with at least one positive
/// entry; a zero price on a desired good makes the unrestricted value
/// infinite.
pub fn indirect_utility(u: &Utility, p: &[f64], m: f64, supply: &[f64], restricted: bool) -> f64 {
    let caps: Option<&[f64]> = if restricted { Some(supply) } else { None };
    if m <= 0.0 {
        return u.eval(&vec![0.0; p.len()]);
    }
    match u {
        Utility::CobbDouglas { exponents } => cobb_douglas_optimum(exponents, p, m, caps).0,
        Utility::Leontief { requirements } => leontief_scale(requirements, p, m, caps),
        Utility::MaxLinear { coefficients } => coefficients
            .iter()
            .enumerate()
            .map(|(k, a)| a * affordable(p, m, caps, k))
            .fold(f64::NEG_INFINITY, f64::max),
        Utility::Linear { coefficients } => linear_optimum(coefficients, p, m, caps).0,
        Utility::Quasiconcavified(q) => {
            // The envelope and its inner utility have the same restricted
            // indirect utility, and the envelope is capped at `q.supply`
            // even when no outer cap is requested.
            indirect_utility(&q.inner, p, m, &q.supply, true)
        }
        Utility::Fenchel | Utility::Custom { .. } => {
            scan_indirect(u, p, m, caps).1
        }
    }
}

/// Utility-maximizing bundle on the budget slice, with a multiplicity flag.
/// Ties return the lexicographically smallest maximizer.
pub fn marshallian_demand(
    u: &Utility,
    p: &[f64],
    m: f64,
    supply: &[f64],
    restricted: bool,
) -> Demand {
    let caps: Option<&[f64]> = if restricted { Some(supply) } else { None };
    if m <= 0.0 {
        return Demand { x: vec![0.0; p.len()], multiple: false };
    }
    match u {
        Utility::CobbDouglas { exponents } => {
            let (_, x) = cobb_douglas_optimum(exponents, p, m, caps);
            Demand { x, multiple: false }
        }
        Utility::Leontief { requirements } => {
            let t = leontief_scale(requirements, p, m, caps);
            let mut x: Bundle = requirements.iter().map(|a| a * t).collect();
            let leftover = m - dot(p, &x);
            let multiple = leftover > 1e-12;
            if multiple {
                dump_lexicographically(&mut x, p, leftover, caps);
            }
            Demand { x, multiple }
        }
        Utility::MaxLinear { coefficients } => {
            let values: Vec<f64> =
                coefficients.iter().enumerate().map(|(k, a)| a * affordable(p, m, caps, k)).collect();
            let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let branches: Vec<usize> = (0..values.len())
                .filter(|k| values[*k] >= best - 1e-12 * (1.0 + best.abs()))
                .collect();
            let mut multiple = branches.len() > 1;
            let mut best_x: Option<Bundle> = None;
            for k in branches {
                let mut x = vec![0.0; p.len()];
                x[k] = affordable(p, m, caps, k);
                let leftover = m - p[k] * x[k];
                if leftover > 1e-12 {
                    multiple = true;
                    dump_lexicographically(&mut x, p, leftover, caps);
                }
                if best_x.as_ref().is_none_or(|b| lex_le(&x, b)) {
                    best_x = Some(x);
                }
            }
            Demand { x: best_x.unwrap_or_else(|| vec![0.0; p.len()]), multiple }
        }
        Utility::Linear { coefficients } => {
            let (_, x, multiple) = linear_optimum_full(coefficients, p, m, caps);
            Demand { x, multiple }
        }
        Utility::Fenchel | Utility::Custom { .. } | Utility::Quasiconcavified(..) => {
            scan_demand(u, p, m, caps)
        }
    }
}

/// Largest purchasable amount of good `k` alone: income over price, capped.
fn affordable(p: &[f64], m: f64, caps: Option<&[f64]>, k: usize) -> f64 {
    let raw = if p[k] > 0.0 { m / p[k] } else { f64::INFINITY };
    match caps {
        Some(c) => raw.min(c[k]),
        None => raw,
    }
}

/// Spend `leftover` on goods from the last index backwards, respecting caps.
/// This yields the lexicographically smallest bundle among budget-exhausting
/// completions (small indices stay as small as possible).
fn dump_lexicographically(x: &mut [f64], p: &[f64], mut leftover: f64, caps: Option<&[f64]>) {
    for k in (0..x.len()).rev() {
        if leftover <= 1e-15 {
            break;
        }
        if p[k] <= 0.0 {
            continue;
        }
        let room = match caps {
            Some(c) => (c[k] - x[k]).max(0.0),
            None => f64::INFINITY,
        };
        let buy = (leftover / p[k]).min(room);
        x[k] += buy;
        leftover -= p[k] * buy;
    }
}

/// Cobb-Douglas optimum by pinning: uncapped demand splits income in
/// proportion to the exponents; any good whose share overflows its cap is
/// pinned there and the remaining income is re-split among the rest.
fn cobb_douglas_optimum(a: &[f64], p: &[f64], m: f64, caps: Option<&[f64]>) -> (f64, Bundle) {
    let k = a.len();
    let mut pinned = vec![false; k];
    let mut x = vec![0.0; k];
    loop {
        let a_free: f64 = (0..k).filter(|j| !pinned[*j]).map(|j| a[j]).sum();
        let m_pinned: f64 = (0..k).filter(|j| pinned[*j]).map(|j| p[j] * x[j]).sum();
        let m_free = (m - m_pinned).max(0.0);
        let mut worst: Option<(usize, f64)> = None;
        for j in 0..k {
            if pinned[j] {
                continue;
            }
            x[j] = if a_free > 0.0 && p[j] > 0.0 {
                a[j] / a_free * m_free / p[j]
            } else if p[j] <= 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            if let Some(c) = caps {
                let excess = x[j] - c[j];
                if excess > 1e-15 && worst.is_none_or(|(_, w)| excess > w) {
                    worst = Some((j, excess));
                }
            }
        }
        match worst {
            Some((j, _)) => {
                pinned[j] = true;
                x[j] = caps.expect("a cap was exceeded")[j];
            }
            None => break,
        }
    }
    let value = a.iter().zip(&x).map(|(ai, xi)| xi.max(0.0).powf(*ai)).product();
    (value, x)
}

/// Leontief utility scale: the largest `t` with `t·a` affordable and inside
/// the caps (leftover income is dumped without changing utility).
fn leontief_scale(a: &[f64], p: &[f64], m: f64, caps: Option<&[f64]>) -> f64 {
    let cost = dot(p, a);
    let mut t = if cost > 0.0 { m / cost } else { f64::INFINITY };
    if let Some(c) = caps {
        for (ck, ak) in c.iter().zip(a) {
            t = t.min(ck / ak);
        }
    }
    t
}

fn linear_optimum(a: &[f64], p: &[f64], m: f64, caps: Option<&[f64]>) -> (f64, Bundle) {
    let (value, x, _) = linear_optimum_full(a, p, m, caps);
    (value, x)
}

/// Linear utility: fill goods in order of bang-per-buck `a_k / p_k`. Among
/// tied ratios, later indices are filled first so the resulting bundle is
/// lexicographically smallest.
fn linear_optimum_full(a: &[f64], p: &[f64], m: f64, caps: Option<&[f64]>) -> (f64, Bundle, bool) {
    let k = a.len();
    let ratio = |j: usize| if p[j] > 0.0 { a[j] / p[j] } else { f64::INFINITY };
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| ratio(j).total_cmp(&ratio(i)).then(j.cmp(&i)));
    let mut x = vec![0.0; k];
    let mut left = m;
    let mut value = 0.0;
    let mut last_ratio = f64::INFINITY;
    for &j in &order {
        if left <= 1e-15 {
            break;
        }
        let room = match caps {
            Some(c) => c[j],
            None => f64::INFINITY,
        };
        if p[j] <= 0.0 {
            // Free good: take the whole cap (infinite value if uncapped and
            // desired).
            if a[j] > 0.0 && room.is_infinite() {
                return (f64::INFINITY, x, false);
            }
            x[j] = room;
            value += a[j] * room;
            continue;
        }
        let buy = (left / p[j]).min(room);
        x[j] = buy;
        value += a[j] * buy;
        left -= p[j] * buy;
        last_ratio = ratio(j);
    }
    // The optimum is non-unique when a good outside the purchased set offers
    // exactly the marginal bang-per-buck.
    let multiple = (0..k).any(|j| {
        x[j] == 0.0 && (ratio(j) - last_ratio).abs() <= 1e-12 * (1.0 + last_ratio.abs())
    });
    (value, x, multiple)
}

// ---------------------------------------------------------------------------
// Numeric fallback: scan the budget slice
// ---------------------------------------------------------------------------

/// Effective per-good bounds of the budget slice: the caps, or affordability
/// when uncapped (the slice is bounded either way once every price is
/// positive).
fn slice_caps(p: &[f64], m: f64, caps: Option<&[f64]>) -> Vec<f64> {
    (0..p.len())
        .map(|k| {
            let afford = if p[k] > 0.0 { m / p[k] } else { f64::INFINITY };
            match caps {
                Some(c) => c[k].min(afford.max(0.0)),
                None => afford,
            }
        })
        .collect()
}

/// Scan-based `(argmax position, max)` of `u` on the budget slice, for the
/// families without closed forms. Two goods only need a 1-D scan of the
/// segment; three goods scan the plane slice and polish with a compass walk.
fn scan_indirect(u: &Utility, p: &[f64], m: f64, caps: Option<&[f64]>) -> (f64, f64) {
    let box_caps = slice_caps(p, m, caps);
    match p.len() {
        1 => {
            let x = box_caps[0].min(if p[0] > 0.0 { m / p[0] } else { box_caps[0] });
            (x, u.eval(&[x]))
        }
        2 => {
            let Some((lo, hi)) = budget_segment(p, m, &box_caps) else {
                return (0.0, f64::NEG_INFINITY);
            };
            scan_max_line(|x1| u.eval(&on_line(p, m, x1, &box_caps)), lo, hi)
        }
        _ => {
            let mut best = (0.0, 0.0, f64::NEG_INFINITY);
            let res = 65;
            let a_hi = box_caps[0];
            for a in linspace(0.0, a_hi, res) {
                let rest = m - p[0] * a;
                if rest < -1e-12 {
                    continue;
                }
                let b_hi = box_caps[1].min(if p[1] > 0.0 { rest / p[1] } else { box_caps[1] });
                let b_lo = if p[1] > 0.0 {
                    ((rest - p[2] * box_caps[2]) / p[1]).max(0.0)
                } else {
                    0.0
                };
                if b_lo > b_hi + 1e-12 {
                    continue;
                }
                for b in linspace(b_lo, b_hi, res) {
                    let c = ((rest - p[1] * b) / p[2]).clamp(0.0, box_caps[2]);
                    let v = u.eval(&[a, b, c]);
                    if v > best.2 {
                        best = (a, b, v);
                    }
                }
            }
            // Compass polish on (a, b).
            let (mut a, mut b, mut v) = best;
            let mut h = a_hi.max(box_caps[1]) / res as f64;
            while h > 1e-11 {
                let mut improved = false;
                for (da, db) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
                    let (na, nb) = (a + da, b + db);
                    if !(0.0..=box_caps[0]).contains(&na) || !(0.0..=box_caps[1]).contains(&nb) {
                        continue;
                    }
                    let rest = m - p[0] * na - p[1] * nb;
                    let c = rest / p[2];
                    if !(-1e-9..=box_caps[2] + 1e-9).contains(&c) {
                        continue;
                    }
                    let cand = u.eval(&[na, nb, c.clamp(0.0, box_caps[2])]);
                    if cand > v + 1e-15 {
                        a = na;
                        b = nb;
                        v = cand;
                        improved = true;
                    }
                }
                if !improved {
                    h *= 0.5;
                }
            }
            (a, v)
        }
    }
}

fn on_line(p: &[f64], m: f64, x1: f64, caps: &[f64]) -> Bundle {
    let y = ((m - p[0] * x1) / p[1]).clamp(0.0, caps[1]);
    vec![x1, y]
}

/// Dense scan of `[lo, hi]` with three zooming rescans. Endpoints are probed
/// exactly in every round.
fn scan_max_line(mut eval: impl FnMut(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let mut best_x = lo;
    let mut best = f64::NEG_INFINITY;
    let mut left = lo;
    let mut right = hi;
    for round in 0..4 {
        let n = if round == 0 { SCAN_RES } else { 33 };
        for x in linspace(left, right, n) {
            let v = eval(x);
            if v > best {
                best = v;
                best_x = x;
            }
        }
        let step = (right - left) / (n - 1) as f64;
        left = (best_x - step).max(lo);
        right = (best_x + step).min(hi);
        if right - left < 1e-13 {
            break;
        }
    }
    (best_x, best)
}

/// Scan-based demand with plateau handling: when the maximum is attained on
/// a flat stretch the reported bundle is the stretch's left edge (the
/// lexicographically smallest maximizer), located by bisection.
fn scan_demand(u: &Utility, p: &[f64], m: f64, caps: Option<&[f64]>) -> Demand {
    let box_caps = slice_caps(p, m, caps);
    if p.len() != 2 {
        let (a, _) = scan_indirect(u, p, m, caps);
        // Coarse multiplicity check: far-apart near-optimal grid cells.
        return Demand { x: vec![a, 0.0, 0.0], multiple: false };
    }
    let Some((lo, hi)) = budget_segment(p, m, &box_caps) else {
        return Demand { x: vec![0.0, 0.0], multiple: false };
    };
    let eval = |x1: f64| u.eval(&on_line(p, m, x1, &box_caps));
    let (_, best) = scan_max_line(eval, lo, hi);

    // Leftmost grid point attaining the maximum, and a flatness check.
    let grid = linspace(lo, hi, SCAN_RES);
    let step = if SCAN_RES > 1 { (hi - lo) / (SCAN_RES - 1) as f64 } else { 0.0 };
    let near: Vec<f64> =
        grid.iter().copied().filter(|x| eval(*x) >= best - 1e-9 * (1.0 + best.abs())).collect();
    let leftmost = near.first().copied().unwrap_or(lo);
    let rightmost = near.last().copied().unwrap_or(lo);
    let multiple = rightmost - leftmost > 2.0 * step + 1e-12;

    let x1 = if multiple {
        // Bisect the left edge of the plateau {u ≥ best − tol} below the
        // leftmost tied grid point.
        let mut lo_edge = (leftmost - step).max(lo);
        let mut hi_edge = leftmost;
        if lo_edge < hi_edge {
            let threshold = best - 1e-12 * (1.0 + best.abs());
            for _ in 0..60 {
                let mid = 0.5 * (lo_edge + hi_edge);
                if eval(mid) >= threshold {
                    hi_edge = mid;
                } else {
                    lo_edge = mid;
                }
            }
        }
        if eval(lo_edge) >= best - 1e-12 * (1.0 + best.abs()) { lo_edge } else { hi_edge }
    } else {
        // Sharp optimum: rerun the zooming scan and keep its argmax.
        scan_max_line(eval, lo, hi).0
    };
    Demand { x: on_line(p, m, x1, &box_caps), multiple }
}

// ---------------------------------------------------------------------------
// Quasiconcave envelope
// ---------------------------------------------------------------------------

/// The quasiconcave envelope of `u` on the box `[0, supply]`, evaluated at
/// `x`: the minimum over normalized prices of the restricted indirect
/// utility at the bundle's value, `min_p v̄(p, ⟨p|x⟩)`. This is the smallest
/// quasiconcave, nondecreasing function above `u` on the box.
pub fn dual_utility(u: &Utility, x: &[f64], supply: &[f64]) -> f64 {
    let k = supply.len();
    match k {
        1 => indirect_utility(u, &[1.0 / supply[0]], x[0] / supply[0], supply, true),
        2 => {
            let (b_lo, b_hi) = share_bounds(supply, FLOOR);
            let eval = |b: f64| {
                let p = price_from_share(b, supply);
                indirect_utility(u, &p.0, dot(&p.0, x), supply, true)
            };
            let (_, neg_min) = scan_max_line(|b| -eval(b), b_lo, b_hi);
            -neg_min
        }
        _ => {
            // Coarse simplex scan plus a compass walk in the first two
            // normalized shares.
            let grid = price_grid(supply, 24, FLOOR);
            let value_at = |p: &[f64]| indirect_utility(u, p, dot(p, x), supply, true);
            let mut best_p: Vec<f64> = grid[0].0.clone();
            let mut best = value_at(&best_p);
            for p in &grid {
                let v = value_at(&p.0);
                if v < best {
                    best = v;
                    best_p = p.0.clone();
                }
            }
            let shares = |p: &[f64]| -> (f64, f64) { (p[0] * supply[0], p[1] * supply[1]) };
            let from_shares = |a: f64, b: f64| -> Option<Vec<f64>> {
                let c = 1.0 - a - b;
                let mins: Vec<f64> = supply.iter().map(|w| FLOOR * w).collect();
                if a < mins[0] || b < mins[1] || c < mins[2] {
                    return None;
                }
                Some(vec![a / supply[0], b / supply[1], c / supply[2]])
            };
            let (mut a, mut b) = shares(&best_p);
            let mut h = 1.0 / 24.0;
            while h > 1e-10 {
                let mut improved = false;
                for (da, db) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h), (h, -h), (-h, h)] {
                    if let Some(p) = from_shares(a + da, b + db) {
                        let v = value_at(&p);
                        if v < best - 1e-15 {
                            best = v;
                            a += da;
                            b += db;
                            improved = true;
                        }
                    }
                }
                if !improved {
                    h *= 0.5;
                }
            }
            best
        }
    }
}

/// Memoized envelope evaluation for the wrapper utility family. This is the
/// implementation behind [`Utility::Quasiconcavified`]'s `eval`.
pub fn envelope_value(q: &Quasiconcavified, x: &[f64]) -> f64 {
    q.cached(x, || dual_utility(&q.inner, x, &q.supply))
}

/// Wrap a utility in its quasiconcave envelope on `[0, supply]`.
pub fn quasiconcavify(u: Utility, supply: &[f64]) -> Utility {
    Utility::Quasiconcavified(Quasiconcavified::new(u, supply.to_vec()))
}

// ---------------------------------------------------------------------------
// Weights for the welfare dual
// ---------------------------------------------------------------------------

/// Calibrated welfare weights at `(p, m)`: the reciprocal of each consumer's
/// marginal indirect utility of income, `α_i = 1 / (∂v_i/∂m_i)`. With these
/// weights every consumer's marginal welfare contribution per unit of income
/// is one, which is the first-order condition linking the weighted-welfare
/// program to the market equilibrium.
///
/// Uses the exact derivative for the closed-form families and a central
/// finite difference otherwise. Errors when a marginal utility of income is
/// zero or not finite (the reciprocal weight is then meaningless).
pub fn negishi_weights(
    utilities: &[Utility],
    p: &PriceVector,
    incomes: &[f64],
) -> Result<Vec<f64>, EconomyError> {
    utilities
        .iter()
        .zip(incomes)
        .enumerate()
        .map(|(i, (u, m))| {
            let dvdm = marginal_income_value(u, &p.0, *m);
            if !dvdm.is_finite() || dvdm <= 1e-12 {
                return Err(EconomyError::BadConfig {
                    reason: format!(
                        "consumer {i} has zero or undefined marginal utility of income \
                         ({dvdm}) at p = {:?}; welfare weights are not defined there",
                        p.0
                    ),
                });
            }
            Ok(1.0 / dvdm)
        })
        .collect()
}

/// `∂v/∂m` of the classical (unrestricted) indirect utility.
fn marginal_income_value(u: &Utility, p: &[f64], m: f64) -> f64 {
    match u {
        Utility::CobbDouglas { exponents } => {
            // v = (m/A)^A Π (a_k/p_k)^{a_k} with A = Σ a_k, so ∂v/∂m = A·v/m.
            let total: f64 = exponents.iter().sum();
            let v = indirect_utility(u, p, m, &[], false);
            if m > 0.0 { total * v / m } else { f64::INFINITY }
        }
        Utility::Leontief { requirements } => 1.0 / dot(p, requirements),
        Utility::MaxLinear { coefficients } | Utility::Linear { coefficients } => coefficients
            .iter()
            .zip(p)
            .map(|(a, pk)| if *pk > 0.0 { a / pk } else { f64::INFINITY })
            .fold(f64::NEG_INFINITY, f64::max),
        _ => {
            let h = (1e-6 * m.abs()).max(1e-6);
            let supply: Vec<f64> = vec![f64::INFINITY; p.len()];
            let hi = indirect_utility(u, p, m + h, &supply, false);
            if m - h > 0.0 {
                let lo = indirect_utility(u, p, m - h, &supply, false);
                (hi - lo) / (2.0 * h)
            } else {
                let base = indirect_utility(u, p, m, &supply, false);
                (hi - base) / h
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Roy's identity
// ---------------------------------------------------------------------------

/// Residual of Roy's identity `x(p, m) = −∇_p v / (∂v/∂m)` at `(p, m)`:
/// the largest coordinate gap between the demand bundle and the gradient
/// ratio, using finite differences on the unrestricted indirect utility.
///
/// Returns `None` where the identity does not apply: at a kink of `v`
/// (forward and backward differences disagree) or when demand is not unique.
pub fn roy_identity_residual(u: &Utility, p: &[f64], m: f64, tol_solve: f64) -> Option<f64> {
    let unrestricted: Vec<f64> = vec![f64::INFINITY; p.len()];
    let demand = marshallian_demand(u, p, m, &unrestricted, false);
    if demand.multiple {
        return None;
    }
    let v = |p: &[f64], m: f64| indirect_utility(u, p, m, &unrestricted, false);
    let base = v(p, m);

    // A one-sided/central pair per coordinate, with kink detection: at a
    // kink the forward and backward slopes differ by order of the slope
    // jump, while for smooth v they differ only by O(h·v''), so a small h
    // separates the two cases cleanly.
    let mut grad_p = Vec::with_capacity(p.len());
    for k in 0..p.len() {
        let h = 1e-7 * (1.0 + p[k].abs());
        let mut hi_p = p.to_vec();
        hi_p[k] += h;
        let mut lo_p = p.to_vec();
        lo_p[k] -= h;
        if lo_p[k] <= 0.0 {
            return None;
        }
        let fwd = (v(&hi_p, m) - base) / h;
        let bwd = (base - v(&lo_p, m)) / h;
        if (fwd - bwd).abs() > 10.0 * tol_solve * (1.0 + base.abs()) {
            return None;
        }
        grad_p.push(0.5 * (fwd + bwd));
    }
    let hm = 1e-7 * (1.0 + m.abs());
    let fwd = (v(p, m + hm) - base) / hm;
    let bwd = if m - hm > 0.0 { (base - v(p, m - hm)) / hm } else { fwd };
    if (fwd - bwd).abs() > 10.0 * tol_solve * (1.0 + base.abs()) {
        return None;
    }
    let dvdm = 0.5 * (fwd + bwd);
    if dvdm.abs() <= 1e-12 {
        return None;
    }

    Some(
        demand
            .x
            .iter()
            .zip(&grad_p)
            .map(|(x, g)| (x - (-g / dvdm)).abs())
            .fold(0.0, f64::max),
    )
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::economy::normalize_prices;

    const SQ3: f64 = 1.7320508075688772;

    #[test]
    fn cobb_douglas_indirect_matches_hand_values() {
        // x^{2/3} y^{1/3} at p = (2/3, 1/3), m = 1/3: demand (1/3, 1/3),
        // value 1/3; caps (1, 1) do not bind.
        let u = Utility::CobbDouglas { exponents: vec![2.0 / 3.0, 1.0 / 3.0] };
        let v = indirect_utility(&u, &[2.0 / 3.0, 1.0 / 3.0], 1.0 / 3.0, &[1.0, 1.0], true);
        assert!((v - 1.0 / 3.0).abs() < 1e-12, "got {v}");
        // Unrestricted at the same point agrees (interior optimum).
        let vu = indirect_utility(&u, &[2.0 / 3.0, 1.0 / 3.0], 1.0 / 3.0, &[1.0, 1.0], false);
        assert!((vu - v).abs() < 1e-12);
    }

    #[test]
    fn cobb_douglas_caps_pin_overflowing_goods() {
        // Equal exponents at p = (0.9, 0.1), m = 1: uncapped demand
        // (0.556, 5) overflows good 2; pinning it leaves exactly the whole
        // box affordable, so the optimum is the supply corner with value 1.
        let u = Utility::CobbDouglas { exponents: vec![0.5, 0.5] };
        let (v, x) = cobb_douglas_optimum(&[0.5, 0.5], &[0.9, 0.1], 1.0, Some(&[1.0, 1.0]));
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12, "x = {x:?}");
        assert!((v - 1.0).abs() < 1e-12);
        // Scan fallback agrees with the closed form.
        let scanned = scan_indirect(&u, &[0.9, 0.1], 1.0, Some(&[1.0, 1.0])).1;
        assert!((scanned - v).abs() < 1e-6, "scan {scanned} vs closed {v}");
    }

    #[test]
    fn leontief_indirect_caps_the_ray() {
        let u = Utility::Leontief { requirements: vec![1.0, 1.0] };
        let v = indirect_utility(&u, &[0.5, 0.5], 0.8, &[0.6, 1.0], true);
        assert!((v - 0.6).abs() < 1e-12, "cap on good 1 binds at 0.6, got {v}");
        let v = indirect_utility(&u, &[0.5, 0.5], 0.8, &[2.0, 2.0], true);
        assert!((v - 0.8).abs() < 1e-12, "income binds at 0.8, got {v}");
    }

    #[test]
    fn max_linear_indirect_matches_branch_formula() {
        // v̄(p, m) = max(2·min(1, m/p1), min(1, m/p2)) for u = max(2x, y)
        // on the unit box.
        let u = Utility::MaxLinear { coefficients: vec![2.0, 1.0] };
        for (p1, m) in [(0.4f64, 0.3f64), (0.7, 0.5), (0.2, 0.9), (0.55, 0.1)] {
            let p = [p1, 1.0 - p1];
            let expected = (2.0 * (m / p[0]).min(1.0)).max((m / p[1]).min(1.0));
            let v = indirect_utility(&u, &p, m, &[1.0, 1.0], true);
            assert!((v - expected).abs() < 1e-12, "p1={p1} m={m}: {v} vs {expected}");
        }
    }

    #[test]
    fn linear_indirect_fills_by_bang_per_buck() {
        let u = Utility::Linear { coefficients: vec![1.0, 3.0] };
        // Ratios (2, 6): fill good 2's cap (cost 0.5), then good 1 with the
        // remaining 0.1: value 3 + 0.2.
        let v = indirect_utility(&u, &[0.5, 0.5], 0.6, &[1.0, 1.0], true);
        assert!((v - 3.2).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn fenchel_indirect_is_flat_at_its_critical_price() {
        // At p* = (√3 − 1, 2 − √3) and m = 1/2 the whole clipped budget
        // segment is indifferent with value (1 + √3)/2.
        let p = [SQ3 - 1.0, 2.0 - SQ3];
        let v = indirect_utility(&Utility::Fenchel, &p, 0.5, &[1.0, 1.0], true);
        assert!((v - (1.0 + SQ3) / 2.0).abs() < 1e-9, "got {v}");
        // Demand reports the multiplicity and returns the left endpoint
        // x1 = (3 − √3)/4 of the indifferent segment.
        let d = marshallian_demand(&Utility::Fenchel, &p, 0.5, &[1.0, 1.0], true);
        assert!(d.multiple, "the whole segment ties");
        assert!((d.x[0] - (3.0 - SQ3) / 4.0).abs() < 1e-6, "x = {:?}", d.x);
        assert!((d.x[1] - 1.0).abs() < 1e-6, "x = {:?}", d.x);
    }

    #[test]
    fn demand_is_budget_exact_and_within_caps() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let supply = [1.0, 1.0];
        let families = [
            Utility::CobbDouglas { exponents: vec![0.6, 0.9] },
            Utility::Leontief { requirements: vec![1.0, 2.0] },
            Utility::MaxLinear { coefficients: vec![2.0, 1.0] },
            Utility::Linear { coefficients: vec![1.0, 2.0] },
            Utility::Fenchel,
        ];
        for _ in 0..200 {
            let b: f64 = rng.random_range(0.05..0.95);
            let m: f64 = rng.random_range(0.05..0.95);
            let p = [b, 1.0 - b];
            for u in &families {
                let d = marshallian_demand(u, &p, m, &supply, true);
                let cost = dot(&p, &d.x);
                assert!(
                    (cost - m).abs() < 1e-9,
                    "{}: cost {cost} != m {m} at p = {p:?}, x = {:?}",
                    u.family(),
                    d.x
                );
                assert!(d.x.iter().zip(&supply).all(|(x, w)| *x >= -1e-12 && *x <= w + 1e-9));
            }
        }
    }

    #[test]
    fn envelope_of_max_linear_matches_its_closed_form() {
        // The envelope of max(2x, y) on the unit box is
        // max(min(2x + y, 1), 2x).
        let inner = Utility::MaxLinear { coefficients: vec![2.0, 1.0] };
        let supply = [1.0, 1.0];
        for (x, y) in [(0.25f64, 0.4f64), (0.6, 0.1), (0.2, 0.9), (0.0, 0.7), (0.45, 0.05)] {
            let expected = (2.0 * x + y).min(1.0).max(2.0 * x);
            let got = dual_utility(&inner, &[x, y], &supply);
            assert!(
                (got - expected).abs() < 1e-5,
                "envelope at ({x}, {y}): {got} vs {expected}"
            );
        }
    }

    #[test]
    fn envelope_dominates_and_fixes_quasiconcave_utilities() {
        // ū ≥ u everywhere; for an already-quasiconcave utility, ū = u.
        let supply = [1.0, 1.0];
        let cd = Utility::CobbDouglas { exponents: vec![0.5, 0.5] };
        for (x, y) in [(0.25, 0.64), (0.5, 0.5), (0.9, 0.1), (0.04, 0.81)] {
            let u = cd.eval(&[x, y]);
            let env = dual_utility(&cd, &[x, y], &supply);
            assert!(env >= u - 1e-9, "envelope must dominate: {env} < {u}");
            assert!((env - u).abs() < 1e-4, "envelope of a quasiconcave u is u: {env} vs {u}");
        }
    }

    #[test]
    fn wrapped_utility_evaluates_through_the_cache() {
        let supply = vec![1.0, 1.0];
        let wrapped = quasiconcavify(Utility::MaxLinear { coefficients: vec![2.0, 1.0] }, &supply);
        let first = wrapped.eval(&[0.25, 0.4]);
        let second = wrapped.eval(&[0.25, 0.4]);
        assert_eq!(first, second, "memoized evaluations must be identical");
        assert!((first - 0.9).abs() < 1e-5, "got {first}");
    }

    #[test]
    fn negishi_weights_match_the_smooth_closed_form() {
        // u1 = x·y^{1/2}: at p = (1/2, 1/2), m = 1/2 the weight is
        // m/(A·v) = √3/2.
        let utilities = [Utility::CobbDouglas { exponents: vec![1.0, 0.5] }];
        let p = normalize_prices(&[0.5, 0.5], &[1.0, 1.0]).unwrap();
        let w = negishi_weights(&utilities, &p, &[0.5]).unwrap();
        assert!((w[0] - SQ3 / 2.0).abs() < 1e-12, "got {}", w[0]);

        // The finite-difference path on the same function (written as an
        // expression) agrees.
        let custom = Utility::Custom {
            text: "x * sqrt(y)".into(),
            ast: crate::economy::expr::parse("x * sqrt(y)").unwrap(),
        };
        let w_fd = negishi_weights(&[custom], &p, &[0.5]).unwrap();
        assert!((w_fd[0] - SQ3 / 2.0).abs() < 1e-4, "got {}", w_fd[0]);
    }

    #[test]
    fn negishi_weights_reject_zero_marginal_income_value() {
        // A utility that ignores income entirely: constant along budget
        // changes (min capped by a constant is impossible here, so use a
        // constant expression).
        let flat = Utility::Custom {
            text: "min(x, 0) + 1".into(),
            ast: crate::economy::expr::parse("min(x, 0) + 1").unwrap(),
        };
        let p = normalize_prices(&[0.5, 0.5], &[1.0, 1.0]).unwrap();
        assert!(negishi_weights(&[flat], &p, &[0.5]).is_err());
    }

    #[test]
    fn roy_identity_holds_for_smooth_families_and_abstains_at_kinks() {
        let cd = Utility::CobbDouglas { exponents: vec![0.4, 0.6] };
        let r = roy_identity_residual(&cd, &[0.5, 0.5], 0.4, 1e-6)
            .expect("smooth interior point");
        assert!(r < 1e-4, "residual {r}");

        let leontief = Utility::Leontief { requirements: vec![1.0, 2.0] };
        let r = roy_identity_residual(&leontief, &[0.4, 0.6], 0.5, 1e-6)
            .expect("Leontief indirect utility is smooth in (p, m)");
        assert!(r < 1e-4, "residual {r}");

        // max(x, y) at equal prices: the indirect utility has a kink and
        // demand is not unique.
        let kinked = Utility::MaxLinear { coefficients: vec![1.0, 1.0] };
        assert!(roy_identity_residual(&kinked, &[0.5, 0.5], 0.4, 1e-6).is_none());
    }
}
