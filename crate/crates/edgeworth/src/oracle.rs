//! Brute-force reference computations.
//!
//! Everything in this module works by exhaustive grid scan plus a single
//! local refinement pass — never the fast solvers or their closed forms.
//! Utilities are evaluated through [`expression_mirror`], a parsed-expression
//! copy of each utility family, so even the closed-form payoff arithmetic is
//! independently recomputed. That makes these routines slow but trustworthy:
//! the test suites compare solver output against them, and the two sides
//! deliberately share no equilibrium logic.
//!
//! Conventions shared with the solvers so results are comparable:
//! prices are normalized (`⟨p|w⟩ = 1`) and floored at 1e-6 per good, scans
//! run over exactly market-clearing, budget-exact allocations (the last
//! consumer's bundle is forced by the others), and ties are broken
//! lexicographically by price, then allocation.

use rayon::prelude::*;

use crate::Mode;
use crate::economy::{Allocation, Bundle, Economy, EconomyError, PriceVector, Utility};
use crate::prices::{
    budget_segment, linear_price_consistent, linspace, price_grid, share_bounds, PriceSet,
};

/// Price floor used by the oracle's scans; matches the solver default so the
/// two sides agree on degenerate economies that pin prices to the boundary.
const PRICE_FLOOR: f64 = 1e-6;

/// Grid optima closer than this in potential are treated as tied.
const TIE_TOL: f64 = 1e-9;

/// Rebuild an economy with every closed-form utility replaced by a parsed
/// arithmetic expression computing the same function.
///
/// Every public scan in this module runs on the mirror instead of the
/// original: the expression interpreter shares no code with the utility
/// enum's native arms, so solver/oracle agreement exercises the closed-form
/// implementations themselves, not just two search strategies on one
/// evaluator. Custom expressions are kept verbatim, and quasiconcave
/// envelope wrappers are kept as-is — they are already evaluated by a scan
/// over the inner function rather than by a formula.
pub fn expression_mirror(economy: &Economy) -> Economy {
    let fmt_terms = |terms: Vec<String>, sep: &str| terms.join(sep);
    let mirrored = economy
        .utilities
        .iter()
        .map(|u| {
            let text = match u {
                Utility::CobbDouglas { exponents } => fmt_terms(
                    exponents
                        .iter()
                        .enumerate()
                        .map(|(j, a)| format!("max(x{}, 0)^{}", j + 1, a))
                        .collect(),
                    " * ",
                ),
                Utility::Leontief { requirements } => {
                    let terms: Vec<String> = requirements
                        .iter()
                        .enumerate()
                        .map(|(j, a)| format!("x{}/{}", j + 1, a))
                        .collect();
                    if terms.len() == 1 {
                        terms.into_iter().next().unwrap()
                    } else {
                        format!("min({})", fmt_terms(terms, ", "))
                    }
                }
                Utility::MaxLinear { coefficients } => {
                    let terms: Vec<String> = coefficients
                        .iter()
                        .enumerate()
                        .map(|(j, a)| format!("{}*x{}", a, j + 1))
                        .collect();
                    if terms.len() == 1 {
                        terms.into_iter().next().unwrap()
                    } else {
                        format!("max({})", fmt_terms(terms, ", "))
                    }
                }
                Utility::Linear { coefficients } => fmt_terms(
                    coefficients
                        .iter()
                        .enumerate()
                        .map(|(j, a)| format!("{}*x{}", a, j + 1))
                        .collect(),
                    " + ",
                ),
                Utility::Fenchel => "x1 + sqrt(x2 + x1*x1)".to_string(),
                Utility::Quasiconcavified(_) | Utility::Custom { .. } => {
                    return u.clone();
                }
            };
            let ast = crate::economy::expr::parse(&text)
                .expect("mirror expressions are generated from valid parameters");
            Utility::Custom { text, ast }
        })
        .collect();
    Economy { utilities: mirrored, ..economy.clone() }
}

/// A cloud of utility vectors with the data that generated them.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PointCloud {
    /// One utility vector `[u_1, …, u_N]` per sample.
    pub points: Vec<Vec<f64>>,
    /// The generator of each sample (allocation coordinates, or prices and
    /// incomes), aligned with `points`.
    pub tags: Vec<Vec<f64>>,
    /// Column labels for `tags`.
    pub tag_labels: Vec<String>,
    /// `frontier[i]` marks samples on the cloud's Pareto frontier.
    pub frontier: Vec<bool>,
}

impl PointCloud {
    /// Render as CSV: utility columns, the frontier flag, then the generator
    /// coordinates.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write;
        let n = self.points.first().map_or(0, Vec::len);
        let mut out = String::new();
        let headers: Vec<String> = (1..=n)
            .map(|i| format!("u_{i}"))
            .chain(std::iter::once("frontier".to_string()))
            .chain(self.tag_labels.iter().cloned())
            .collect();
        let _ = writeln!(out, "{}", headers.join(","));
        for ((point, tag), frontier) in self.points.iter().zip(&self.tags).zip(&self.frontier) {
            let mut cells: Vec<String> = point.iter().map(|v| format!("{v}")).collect();
            cells.push(if *frontier { "1".into() } else { "0".into() });
            cells.extend(tag.iter().map(|v| format!("{v}")));
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    /// Utility vectors of the frontier samples.
    pub fn frontier_points(&self) -> Vec<Vec<f64>> {
        self.points
            .iter()
            .zip(&self.frontier)
            .filter(|(_, f)| **f)
            .map(|(p, _)| p.clone())
            .collect()
    }
}

/// Result of a brute-force equilibrium scan.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    /// Primary optimum: lexicographically smallest among the tied best.
    pub p: PriceVector,
    pub x: Allocation,
    pub incomes: Vec<f64>,
    pub utilities: Vec<f64>,
    /// Potential at the primary optimum (0 at a Walrasian equilibrium,
    /// strictly negative otherwise).
    pub potential: f64,
    /// Every grid optimum within tolerance of the best, in grid accuracy,
    /// ordered by price. Contains at least the primary's grid ancestor.
    pub ties: Vec<TiedOptimum>,
}

/// One member of the tied-optimum set of a scan.
#[derive(Debug, Clone)]
pub struct TiedOptimum {
    pub p: PriceVector,
    pub x: Allocation,
    pub utilities: Vec<f64>,
    pub potential: f64,
}

/// A feasible reallocation that makes no one worse off and someone strictly
/// better off.
#[derive(Debug, Clone)]
pub struct ParetoWitness {
    pub x: Allocation,
    pub utilities: Vec<f64>,
    /// `u_i(x'_i) − u_i(x_i)` per consumer.
    pub gains: Vec<f64>,
    /// The price that generated the witness when the search was restricted
    /// to linear-price-consistent reallocations.
    pub price: Option<PriceVector>,
}

/// A sampled point of the (restricted) contract surface.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ContractPoint {
    pub x: Allocation,
    pub utilities: Vec<f64>,
    /// All prices at which the point's trades are value-neutral, or `None`
    /// when no linear price supports them.
    pub price_set: Option<PriceSet>,
}

// ---------------------------------------------------------------------------
// Restricted indirect utility by scan
// ---------------------------------------------------------------------------

/// Budget-exact bundle candidates for one consumer at prices `p`: a grid over
/// the slice of the budget hyperplane inside the box `[0, caps]`, endpoints
/// included exactly (kink optima of the piecewise-linear families sit there).
fn budget_bundles(p: &[f64], m: f64, caps: &[f64], res: usize) -> Vec<Bundle> {
    match p.len() {
        1 => {
            let x = m / p[0];
            if x <= caps[0] + 1e-9 {
                vec![vec![x.min(caps[0])]]
            } else {
                Vec::new()
            }
        }
        2 => match budget_segment(p, m, caps) {
            Some((lo, hi)) => linspace(lo, hi, res)
                .into_iter()
                .map(|x1| bundle_on_line(p, m, x1, caps))
                .collect(),
            None => Vec::new(),
        },
        3 => {
            let mut out = Vec::new();
            let a_hi = (m / p[0]).min(caps[0]);
            for a in linspace(0.0, a_hi, res) {
                let rest = m - p[0] * a;
                let b_hi = (rest / p[1]).min(caps[1]);
                let b_lo = ((rest - p[2] * caps[2]) / p[1]).max(0.0);
                if b_lo > b_hi + 1e-12 {
                    continue;
                }
                for b in linspace(b_lo, b_hi, res) {
                    let c = ((rest - p[1] * b) / p[2]).clamp(0.0, caps[2]);
                    out.push(vec![a, b, c]);
                }
            }
            out
        }
        _ => Vec::new(),
    }
}

/// The two-good bundle on the budget line with `x_1` of good 1.
fn bundle_on_line(p: &[f64], m: f64, x1: f64, caps: &[f64]) -> Bundle {
    let y = ((m - p[0] * x1) / p[1]).clamp(0.0, caps[1]);
    vec![x1, y]
}

/// `max u(x)` over budget-exact bundles in `[0, caps]`, by dense scan with a
/// zooming refinement pass. This is the oracle's own evaluation of the
/// restricted indirect utility.
pub fn restricted_indirect(u: &Utility, p: &[f64], m: f64, caps: &[f64], res: usize) -> f64 {
    match p.len() {
        2 => {
            let Some((lo, hi)) = budget_segment(p, m, caps) else {
                return f64::NEG_INFINITY;
            };
            let eval = |x1: f64| u.eval(&bundle_on_line(p, m, x1, caps));
            scan_max_1d(eval, lo, hi, res).1
        }
        _ => {
            let candidates = budget_bundles(p, m, caps, res);
            let mut best = f64::NEG_INFINITY;
            let mut best_x: Option<Bundle> = None;
            for x in candidates {
                let v = u.eval(&x);
                if v > best {
                    best = v;
                    best_x = Some(x);
                }
            }
            // One compass refinement pass around the best grid point, moving
            // along the budget hyperplane.
            if let Some(x0) = best_x {
                if p.len() == 3 {
                    best = refine_plane(u, p, m, caps, &x0, res).max(best);
                }
            }
            best
        }
    }
}

/// Dense scan of `[lo, hi]` followed by three zooming rescans around the
/// best cell. Returns (argmax, max). Endpoints are always probed exactly.
fn scan_max_1d(mut eval: impl FnMut(f64) -> f64, lo: f64, hi: f64, res: usize) -> (f64, f64) {
    let res = res.max(4);
    let mut best_x = lo;
    let mut best = f64::NEG_INFINITY;
    let mut left = lo;
    let mut right = hi;
    for round in 0..4 {
        let n = if round == 0 { res } else { 33 };
        for x in linspace(left, right, n) {
            let v = eval(x);
            if v > best {
                best = v;
                best_x = x;
            }
        }
        let step = (right - left) / (n - 1).max(1) as f64;
        left = (best_x - step).max(lo);
        right = (best_x + step).min(hi);
        if right - left < 1e-13 {
            break;
        }
    }
    (best_x, best)
}

/// Compass-search refinement of a bundle on the three-good budget plane.
fn refine_plane(u: &Utility, p: &[f64], m: f64, caps: &[f64], x0: &[f64], res: usize) -> f64 {
    // Parameterize by (x_1, x_2); x_3 balances the budget.
    let project = |a: f64, b: f64| -> Option<Bundle> {
        if !(0.0..=caps[0]).contains(&a) || !(0.0..=caps[1]).contains(&b) {
            return None;
        }
        let c = (m - p[0] * a - p[1] * b) / p[2];
        if !(-1e-9..=caps[2] + 1e-9).contains(&c) {
            return None;
        }
        Some(vec![a, b, c.clamp(0.0, caps[2])])
    };
    let mut a = x0[0];
    let mut b = x0[1];
    let mut best = u.eval(x0);
    let mut h = (caps[0].max(caps[1])) / res.max(2) as f64;
    while h > 1e-11 {
        let mut improved = false;
        for (da, db) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
            if let Some(x) = project(a + da, b + db) {
                let v = u.eval(&x);
                if v > best + 1e-15 {
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

// ---------------------------------------------------------------------------
// Equilibrium scan
// ---------------------------------------------------------------------------

struct ScanRecord {
    p: PriceVector,
    potential: f64,
    x: Vec<Bundle>,
    utilities: Vec<f64>,
    incomes: Vec<f64>,
}

/// Exhaustively maximize the potential over normalized prices and
/// budget-exact market-clearing allocations, then refine the best point.
///
/// * `Mode::Walrasian` (or `Mode::DualNegishi`, whose equilibria coincide)
///   maximizes the raw potential.
/// * `Mode::Yquilibrium` additionally enforces individual rationality and
///   drops tied optima whose utility vectors are dominated by other tied
///   optima; it requires an endowment economy.
///
/// Supports up to three consumers and three goods; `resolution` is the grid
/// density per scan axis.
pub fn brute_force_equilibrium(
    economy: &Economy,
    mode: Mode,
    resolution: usize,
) -> Result<OracleSolution, EconomyError> {
    economy.validate()?;
    let economy = &expression_mirror(economy);
    let n = economy.n();
    let k = economy.k();
    if n > 3 || k > 3 {
        return Err(EconomyError::BadConfig {
            reason: format!("brute force supports at most 3 consumers and 3 goods, got {n}×{k}"),
        });
    }
    if resolution < 2 {
        return Err(EconomyError::BadConfig {
            reason: format!("resolution must be at least 2, got {resolution}"),
        });
    }
    let yq = matches!(mode, Mode::Yquilibrium);
    if yq && economy.endowments().is_none() {
        return Err(EconomyError::BadConfig {
            reason: "yquilibrium mode needs an endowment economy".into(),
        });
    }
    let ir: Option<Vec<f64>> = if yq {
        economy
            .endowments()
            .map(|omega| omega.iter().enumerate().map(|(i, o)| economy.utility(i, o)).collect())
    } else {
        None
    };

    let grid = price_grid(&economy.supply, resolution, PRICE_FLOOR);
    let records: Vec<Option<ScanRecord>> = grid
        .par_iter()
        .map(|p| evaluate_price(economy, p, ir.as_deref(), resolution))
        .collect();

    let mut best = f64::NEG_INFINITY;
    for rec in records.iter().flatten() {
        if rec.potential > best {
            best = rec.potential;
        }
    }
    if best == f64::NEG_INFINITY {
        return Err(EconomyError::BadConfig {
            reason: "no feasible budget-exact allocation at any scanned price".into(),
        });
    }
    let mut tied: Vec<&ScanRecord> =
        records.iter().flatten().filter(|r| r.potential >= best - TIE_TOL).collect();

    if yq {
        // Drop tied optima whose utility vectors are dominated within the tie
        // set: those are resting points of the potential that trade could
        // still improve for everyone.
        let kept: Vec<bool> = tied
            .iter()
            .map(|r| {
                !tied.iter().any(|other| {
                    other.utilities.iter().zip(&r.utilities).all(|(a, b)| *a >= b - 1e-12)
                        && other
                            .utilities
                            .iter()
                            .zip(&r.utilities)
                            .any(|(a, b)| *a > b + TIE_TOL)
                })
            })
            .collect();
        tied = tied
            .into_iter()
            .zip(kept)
            .filter(|(_, keep)| *keep)
            .map(|(r, _)| r)
            .collect();
    }
    // Grid order is already lexicographic in price; the primary is the first
    // survivor.
    let primary = tied.first().expect("the best record survives its own filter");

    let ties: Vec<TiedOptimum> = tied
        .iter()
        .map(|r| TiedOptimum {
            p: r.p.clone(),
            x: Allocation(r.x.clone()),
            utilities: r.utilities.clone(),
            potential: r.potential,
        })
        .collect();

    // Refinement pass. For two goods the price is one-dimensional: pattern
    // search sharpens isolated optima, and a bisection pinpoints the lower
    // edge when the optimum sits on a plateau of tied prices.
    let refined = if k == 2 {
        refine_k2(economy, ir.as_deref(), resolution, primary, &records, best)
    } else {
        None
    };
    let (p, x, utilities, incomes, potential) = match refined {
        Some(r) => r,
        None => (
            primary.p.clone(),
            Allocation(primary.x.clone()),
            primary.utilities.clone(),
            primary.incomes.clone(),
            primary.potential,
        ),
    };

    Ok(OracleSolution { p, x, incomes, utilities, potential, ties })
}

/// Best potential at one price: restricted indirect utilities per consumer,
/// then a scan over budget-exact allocations (the last consumer's bundle is
/// forced by market clearing), sharpened by a pattern search so off-grid
/// inner optima — e.g. a clearing split halfway between grid nodes — do not
/// suppress a price that is actually a root.
fn evaluate_price(
    economy: &Economy,
    p: &PriceVector,
    ir: Option<&[f64]>,
    res: usize,
) -> Option<ScanRecord> {
    let incomes = economy.incomes_at(p);
    let vbar: Vec<f64> = economy
        .utilities
        .iter()
        .zip(&incomes)
        .map(|(u, m)| restricted_indirect(u, &p.0, *m, &economy.supply, res))
        .collect();
    let seed = best_allocation_at(economy, p, &incomes, &vbar, ir, res)?;
    let best = if economy.k() == 2 {
        refine_positions(economy, p, &incomes, &vbar, ir, res, seed)
    } else {
        seed
    };
    Some(ScanRecord {
        p: p.clone(),
        potential: best.potential,
        x: best.x,
        utilities: best.utilities,
        incomes,
    })
}

struct InnerBest {
    potential: f64,
    x: Vec<Bundle>,
    utilities: Vec<f64>,
}

/// Scan budget-exact allocations at fixed prices and return the best
/// potential. Ties keep the lexicographically smallest allocation because
/// candidate grids run in ascending coordinate order.
fn best_allocation_at(
    economy: &Economy,
    p: &PriceVector,
    incomes: &[f64],
    vbar: &[f64],
    ir: Option<&[f64]>,
    res: usize,
) -> Option<InnerBest> {
    let n = economy.n();
    let k = economy.k();
    let sum_vbar: f64 = vbar.iter().sum();
    if !sum_vbar.is_finite() {
        return None;
    }
    // Bundle candidates (with cached utilities) for every consumer but the
    // last.
    let candidates: Vec<Vec<(Bundle, f64)>> = (0..n - 1)
        .map(|i| {
            budget_bundles(&p.0, incomes[i], &economy.supply, res)
                .into_iter()
                .map(|x| {
                    let u = economy.utility(i, &x);
                    (x, u)
                })
                .collect()
        })
        .collect();
    if candidates.iter().any(Vec::is_empty) {
        return None;
    }

    let mut best: Option<InnerBest> = None;
    let mut chosen: Vec<usize> = vec![0; n - 1];
    let mut last = vec![0.0; k];
    // Depth-first product over candidate lists.
    fn rec(
        depth: usize,
        economy: &Economy,
        candidates: &[Vec<(Bundle, f64)>],
        chosen: &mut Vec<usize>,
        last: &mut Vec<f64>,
        ir: Option<&[f64]>,
        sum_vbar: f64,
        best: &mut Option<InnerBest>,
    ) {
        let n = economy.n();
        if depth == n - 1 {
            // Force the last consumer's bundle by market clearing.
            for k_idx in 0..economy.k() {
                let mut v = economy.supply[k_idx];
                for (i, &c) in chosen.iter().enumerate() {
                    v -= candidates[i][c].0[k_idx];
                }
                if v < -1e-9 {
                    return;
                }
                last[k_idx] = if v.abs() < 1e-12 { 0.0 } else { v.max(0.0) };
            }
            let u_last = economy.utility(n - 1, last);
            if let Some(ir) = ir {
                if u_last < ir[n - 1] - 1e-9 {
                    return;
                }
            }
            let mut total = u_last;
            for (i, &c) in chosen.iter().enumerate() {
                total += candidates[i][c].1;
            }
            let potential = total - sum_vbar;
            if best.as_ref().is_none_or(|b| potential > b.potential) {
                let mut x: Vec<Bundle> =
                    chosen.iter().enumerate().map(|(i, &c)| candidates[i][c].0.clone()).collect();
                x.push(last.clone());
                let mut utilities: Vec<f64> =
                    chosen.iter().enumerate().map(|(i, &c)| candidates[i][c].1).collect();
                utilities.push(u_last);
                *best = Some(InnerBest { potential, x, utilities });
            }
            return;
        }
        for c in 0..candidates[depth].len() {
            if let Some(ir) = ir {
                if candidates[depth][c].1 < ir[depth] - 1e-9 {
                    continue;
                }
            }
            chosen[depth] = c;
            rec(depth + 1, economy, candidates, chosen, last, ir, sum_vbar, best);
        }
    }
    rec(0, economy, &candidates, &mut chosen, &mut last, ir, sum_vbar, &mut best);
    best
}

/// Local refinement for two-good scans: joint pattern search over the budget
/// share and the allocation positions, plus plateau-edge bisection so the
/// reported price is the lexicographic minimum of a tied interval rather
/// than an arbitrary grid point inside it.
#[allow(clippy::type_complexity)]
fn refine_k2(
    economy: &Economy,
    ir: Option<&[f64]>,
    res: usize,
    primary: &ScanRecord,
    records: &[Option<ScanRecord>],
    best_grid: f64,
) -> Option<(PriceVector, Allocation, Vec<f64>, Vec<f64>, f64)> {
    let supply = &economy.supply;
    let (b_lo, b_hi) = share_bounds(supply, PRICE_FLOOR);

    // Evaluate the refined inner optimum at a budget share.
    let eval_at = |b: f64| -> Option<InnerBest> {
        let p = crate::prices::price_from_share(b, supply);
        let incomes = economy.incomes_at(&p);
        let vbar: Vec<f64> = economy
            .utilities
            .iter()
            .zip(&incomes)
            .map(|(u, m)| restricted_indirect(u, &p.0, *m, supply, res))
            .collect();
        let seed = best_allocation_at(economy, &p, &incomes, &vbar, ir, res)?;
        Some(refine_positions(economy, &p, &incomes, &vbar, ir, res, seed))
    };

    let b0 = crate::prices::share_of_price(&primary.p, supply);
    let step = (b_hi - b_lo) / (res - 1).max(1) as f64;

    // Pattern search on the share. (Positions are re-optimized per probe, so
    // this is a one-dimensional search on the profile function.)
    let mut b_best = b0;
    let mut inner_best = eval_at(b0)?;
    let mut h = step;
    while h > 1e-12 {
        let mut improved = false;
        for cand in [b_best - h, b_best + h] {
            let cand = cand.clamp(b_lo, b_hi);
            if cand == b_best {
                continue;
            }
            if let Some(inner) = eval_at(cand) {
                if inner.potential > inner_best.potential + 1e-15 {
                    inner_best = inner;
                    b_best = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }

    // Plateau handling. When the maximum is attained on an interval of
    // prices the pattern search cannot improve and stays at the grid point;
    // the lexicographic minimum is then the interval's lower edge, found by
    // bisecting between the primary and its (sub-optimal) left neighbor.
    // The edge only replaces the pattern result if its potential actually
    // reaches the refined optimum: two grid points straddling a sharp
    // maximum look like a tie too, and must not drag the price back left.
    let tied_flags: Vec<bool> = records
        .iter()
        .map(|r| r.as_ref().is_some_and(|r| r.potential >= best_grid - TIE_TOL))
        .collect();
    let primary_idx = records
        .iter()
        .position(|r| {
            r.as_ref().is_some_and(|r| (r.p.0[0] - primary.p.0[0]).abs() < 1e-15)
        })
        .unwrap_or(0);
    let plateau = tied_flags.iter().filter(|f| **f).count() >= 2;
    if plateau && primary_idx > 0 && !tied_flags[primary_idx - 1] {
        let target = inner_best.potential.max(best_grid);
        let threshold = target - 1e-12 - 1e-12 * target.abs();
        let mut lo = b_lo + step * (primary_idx - 1) as f64;
        let mut hi = b0.min(b_best);
        if lo < hi {
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                match eval_at(mid) {
                    Some(inner) if inner.potential >= threshold => hi = mid,
                    _ => lo = mid,
                }
                if hi - lo < 1e-12 {
                    break;
                }
            }
            if hi < b_best {
                if let Some(inner) = eval_at(hi) {
                    if inner.potential >= threshold {
                        b_best = hi;
                        inner_best = inner;
                    }
                }
            }
        }
    }

    let p = crate::prices::price_from_share(b_best, supply);
    let incomes = economy.incomes_at(&p);
    Some((p, Allocation(inner_best.x), inner_best.utilities, incomes, inner_best.potential))
}

/// Pattern-search refinement of allocation positions at fixed prices,
/// seeded from the grid optimum. Positions move along each consumer's
/// budget segment; the last consumer stays market-clearing by construction.
fn refine_positions(
    economy: &Economy,
    p: &PriceVector,
    incomes: &[f64],
    vbar: &[f64],
    ir: Option<&[f64]>,
    res: usize,
    seed: InnerBest,
) -> InnerBest {
    let n = economy.n();
    let supply = &economy.supply;
    let sum_vbar: f64 = vbar.iter().sum();
    let segments: Vec<(f64, f64)> = (0..n - 1)
        .map(|i| budget_segment(&p.0, incomes[i], supply).unwrap_or((0.0, 0.0)))
        .collect();

    let eval = |pos: &[f64]| -> Option<InnerBest> {
        let mut x: Vec<Bundle> = Vec::with_capacity(n);
        let mut utilities = Vec::with_capacity(n);
        let mut total = 0.0;
        for i in 0..n - 1 {
            let xi = bundle_on_line(&p.0, incomes[i], pos[i], supply);
            let u = economy.utility(i, &xi);
            if let Some(ir) = ir {
                if u < ir[i] - 1e-9 {
                    return None;
                }
            }
            total += u;
            x.push(xi);
            utilities.push(u);
        }
        let mut last = vec![0.0; supply.len()];
        for k_idx in 0..supply.len() {
            let mut v = supply[k_idx];
            for xi in &x {
                v -= xi[k_idx];
            }
            if v < -1e-9 {
                return None;
            }
            last[k_idx] = if v.abs() < 1e-12 { 0.0 } else { v.max(0.0) };
        }
        let u_last = economy.utility(n - 1, &last);
        if let Some(ir) = ir {
            if u_last < ir[n - 1] - 1e-9 {
                return None;
            }
        }
        total += u_last;
        utilities.push(u_last);
        x.push(last);
        Some(InnerBest { potential: total - sum_vbar, x, utilities })
    };

    let mut pos: Vec<f64> = seed.x.iter().take(n - 1).map(|xi| xi[0]).collect();
    let mut best = seed;
    let mut h: Vec<f64> = segments
        .iter()
        .map(|(lo, hi)| ((hi - lo) / (res - 1).max(1) as f64).max(1e-12))
        .collect();
    for _ in 0..200 {
        let mut improved = false;
        for i in 0..pos.len() {
            for dir in [-1.0, 1.0] {
                let cand = (pos[i] + dir * h[i]).clamp(segments[i].0, segments[i].1);
                if cand == pos[i] {
                    continue;
                }
                let old = pos[i];
                pos[i] = cand;
                match eval(&pos) {
                    Some(inner) if inner.potential > best.potential + 1e-15 => {
                        best = inner;
                        improved = true;
                    }
                    _ => pos[i] = old,
                }
            }
        }
        if !improved {
            for hi in h.iter_mut() {
                *hi *= 0.5;
            }
            if h.iter().all(|v| *v < 1e-13) {
                break;
            }
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Utility and value possibility sets
// ---------------------------------------------------------------------------

/// Sample the utility possibility set: utility vectors of market-clearing
/// allocations on a grid. Tags are the allocation coordinates.
pub fn sample_ups(economy: &Economy, resolution: usize) -> Result<PointCloud, EconomyError> {
    economy.validate()?;
    let economy = &expression_mirror(economy);
    let n = economy.n();
    let k = economy.k();
    if n > 3 {
        return Err(EconomyError::BadConfig {
            reason: format!("UPS sampling supports at most 3 consumers, got {n}"),
        });
    }
    let axes: Vec<Vec<f64>> =
        economy.supply.iter().map(|w| linspace(0.0, *w, resolution)).collect();

    let mut points = Vec::new();
    let mut tags = Vec::new();
    // Free bundles for consumers 1..N−1 over the box grid; the last consumer
    // absorbs the remainder when it is nonnegative.
    let dims = (n - 1) * k;
    let mut index = vec![0usize; dims];
    loop {
        let mut x: Vec<Bundle> = Vec::with_capacity(n);
        for i in 0..n - 1 {
            x.push((0..k).map(|g| axes[g][index[i * k + g]]).collect());
        }
        let mut last = vec![0.0; k];
        let mut feasible = true;
        for g in 0..k {
            let mut v = economy.supply[g];
            for xi in &x {
                v -= xi[g];
            }
            if v < -1e-9 {
                feasible = false;
                break;
            }
            last[g] = if v.abs() < 1e-12 { 0.0 } else { v.max(0.0) };
        }
        if feasible {
            x.push(last);
            let u: Vec<f64> = x.iter().enumerate().map(|(i, xi)| economy.utility(i, xi)).collect();
            tags.push(x.into_iter().flatten().collect());
            points.push(u);
        }
        // Advance the mixed-radix counter.
        let mut d = 0;
        loop {
            if d == dims {
                break;
            }
            index[d] += 1;
            if index[d] < resolution {
                break;
            }
            index[d] = 0;
            d += 1;
        }
        if d == dims {
            break;
        }
    }

    let frontier = maximal_flags(&points, false);
    let tag_labels = allocation_labels(economy);
    Ok(PointCloud { points, tags, tag_labels, frontier })
}

/// Sample the value possibility set: vectors of (restricted) indirect
/// utilities over a grid of normalized prices and income splits. Tags are
/// the price and income coordinates. With `restricted` false the box cap is
/// dropped and the classical indirect utility is sampled instead.
pub fn sample_vps(
    economy: &Economy,
    resolution: usize,
    restricted: bool,
) -> Result<PointCloud, EconomyError> {
    economy.validate()?;
    let economy = &expression_mirror(economy);
    let n = economy.n();
    let k = economy.k();
    let prices = price_grid(&economy.supply, resolution, PRICE_FLOOR);
    let incomes = income_grid(n, resolution);

    let rows: Vec<(Vec<f64>, Vec<f64>)> = prices
        .par_iter()
        .flat_map_iter(|p| {
            incomes.iter().map(move |m| {
                let v: Vec<f64> = economy
                    .utilities
                    .iter()
                    .zip(m)
                    .map(|(u, mi)| {
                        if restricted {
                            restricted_indirect(u, &p.0, *mi, &economy.supply, resolution)
                        } else {
                            // Unrestricted: cap only by affordability.
                            let caps: Vec<f64> =
                                p.0.iter().map(|pk| if *pk > 0.0 { mi / pk } else { 0.0 }).collect();
                            restricted_indirect(u, &p.0, *mi, &caps, resolution)
                        }
                    })
                    .collect();
                let mut tag = p.0.clone();
                tag.extend_from_slice(m);
                (v, tag)
            })
        })
        .collect();

    let (points, tags): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let frontier = maximal_flags(&points, true);
    let mut tag_labels: Vec<String> =
        economy.goods.iter().map(|g| format!("p_{g}")).collect();
    tag_labels.extend((1..=n).map(|i| format!("m_{i}")));
    let _ = k;
    Ok(PointCloud { points, tags, tag_labels, frontier })
}

fn allocation_labels(economy: &Economy) -> Vec<String> {
    let mut labels = Vec::new();
    for i in 1..=economy.n() {
        for g in &economy.goods {
            labels.push(format!("x{i}_{g}"));
        }
    }
    labels
}

/// Grid over the income simplex `{m ≥ 0 : Σ m_i = 1}`.
fn income_grid(n: usize, resolution: usize) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![1.0]],
        2 => linspace(0.0, 1.0, resolution).into_iter().map(|m| vec![m, 1.0 - m]).collect(),
        _ => {
            let mut out = Vec::new();
            for i in 0..resolution {
                for j in 0..resolution - i {
                    let a = i as f64 / (resolution - 1) as f64;
                    let b = j as f64 / (resolution - 1) as f64;
                    if a + b <= 1.0 + 1e-12 {
                        out.push(vec![a, b, (1.0 - a - b).max(0.0)]);
                    }
                }
            }
            out
        }
    }
}

/// Flags of the points that are maximal (or minimal, when `minimal` is true)
/// under weak componentwise dominance: a point is off the frontier iff some
/// other point is at least as good everywhere and strictly better somewhere.
pub fn maximal_flags(points: &[Vec<f64>], minimal: bool) -> Vec<bool> {
    let dim = points.first().map_or(0, Vec::len);
    let signed: Vec<Vec<f64>> = if minimal {
        points.iter().map(|p| p.iter().map(|v| -v).collect()).collect()
    } else {
        points.to_vec()
    };
    match dim {
        0 => Vec::new(),
        1 => {
            let best = signed.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            signed.iter().map(|p| p[0] >= best - 1e-12).collect()
        }
        2 => maximal_flags_2d(&signed),
        3 => maximal_flags_3d(&signed),
        _ => {
            // Quadratic fallback for small higher-dimensional clouds.
            (0..signed.len())
                .map(|i| {
                    !signed.iter().enumerate().any(|(j, q)| {
                        j != i
                            && q.iter().zip(&signed[i]).all(|(a, b)| *a >= *b)
                            && q.iter().zip(&signed[i]).any(|(a, b)| *a > *b + 1e-12)
                    })
                })
                .collect()
        }
    }
}

fn maximal_flags_2d(points: &[Vec<f64>]) -> Vec<bool> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        points[j][0]
            .total_cmp(&points[i][0])
            .then(points[j][1].total_cmp(&points[i][1]))
    });
    let mut flags = vec![false; points.len()];
    let mut idx = 0;
    let mut best_u2_strict = f64::NEG_INFINITY;
    while idx < order.len() {
        // Group of equal first coordinate.
        let u0 = points[order[idx]][0];
        let mut end = idx;
        while end < order.len() && points[order[end]][0] == u0 {
            end += 1;
        }
        let group = &order[idx..end];
        let group_best_u2 =
            group.iter().map(|&i| points[i][1]).fold(f64::NEG_INFINITY, f64::max);
        for &i in group {
            let u2 = points[i][1];
            let dominated = best_u2_strict >= u2 || group_best_u2 > u2 + 1e-12;
            flags[i] = !dominated;
        }
        best_u2_strict = best_u2_strict.max(group_best_u2);
        idx = end;
    }
    flags
}

fn maximal_flags_3d(points: &[Vec<f64>]) -> Vec<bool> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        points[j][0]
            .total_cmp(&points[i][0])
            .then(points[j][1].total_cmp(&points[i][1]))
            .then(points[j][2].total_cmp(&points[i][2]))
    });
    let mut flags = vec![false; points.len()];
    // Staircase of undominated (u2, u3) pairs from strictly earlier groups:
    // sorted by u2 descending with u3 strictly increasing.
    let mut stairs: Vec<(f64, f64)> = Vec::new();
    let query = |stairs: &[(f64, f64)], u2: f64, u3: f64| -> bool {
        // Any entry with u2' ≥ u2 and u3' ≥ u3 dominates. Entries with
        // u2' ≥ u2 form a prefix, whose largest u3 is at its end.
        let mut lo = 0usize;
        let mut hi = stairs.len();
        while lo < hi {
            let mid = (lo + hi) / 2;
            if stairs[mid].0 >= u2 {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo > 0 && stairs[lo - 1].1 >= u3
    };
    let mut idx = 0;
    while idx < order.len() {
        let u0 = points[order[idx]][0];
        let mut end = idx;
        while end < order.len() && points[order[end]][0] == u0 {
            end += 1;
        }
        let group = &order[idx..end];
        for &i in group {
            let (u2, u3) = (points[i][1], points[i][2]);
            let mut dominated = query(&stairs, u2, u3);
            if !dominated {
                dominated = group.iter().any(|&j| {
                    j != i
                        && points[j][1] >= u2
                        && points[j][2] >= u3
                        && (points[j][1] > u2 + 1e-12 || points[j][2] > u3 + 1e-12)
                });
            }
            flags[i] = !dominated;
        }
        for &i in group {
            let (u2, u3) = (points[i][1], points[i][2]);
            if query(&stairs, u2, u3) {
                continue;
            }
            stairs.retain(|&(a, b)| !(a <= u2 && b <= u3));
            let pos = stairs.partition_point(|&(a, _)| a > u2);
            stairs.insert(pos, (u2, u3));
        }
        idx = end;
    }
    flags
}

/// Largest distance from any point of `from` to its nearest point in `to`
/// (the directed Hausdorff distance between finite point sets).
pub fn directed_hausdorff(from: &[Vec<f64>], to: &[Vec<f64>]) -> f64 {
    from.iter()
        .map(|a| {
            to.iter()
                .map(|b| {
                    a.iter()
                        .zip(b)
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Pareto improvement search and the contract surface
// ---------------------------------------------------------------------------

/// Search for a feasible reallocation that weakly improves every consumer
/// and strictly improves at least one by more than `strict_margin`.
///
/// With `restrict_linear_prices` the search only considers reallocations
/// whose trades are value-neutral at some normalized price (scanning a price
/// grid and the budget-exact allocations it induces); otherwise it scans all
/// market-clearing allocations on a box grid.
pub fn pareto_improvement_search(
    economy: &Economy,
    x: &Allocation,
    resolution: usize,
    restrict_linear_prices: bool,
    strict_margin: f64,
) -> Result<Option<ParetoWitness>, EconomyError> {
    economy.validate()?;
    let economy = &expression_mirror(economy);
    let n = economy.n();
    let base: Vec<f64> = x.0.iter().enumerate().map(|(i, xi)| economy.utility(i, xi)).collect();

    let improves = |u: &[f64]| -> bool {
        u.iter().zip(&base).all(|(a, b)| *a >= b - 1e-9)
            && u.iter().zip(&base).any(|(a, b)| *a > b + strict_margin)
    };

    let mut best: Option<ParetoWitness> = None;
    let mut consider = |x_new: Vec<Bundle>, u: Vec<f64>, price: Option<PriceVector>| {
        if !improves(&u) {
            return;
        }
        let total: f64 = u.iter().zip(&base).map(|(a, b)| a - b).sum();
        let better = match &best {
            None => true,
            Some(w) => total > w.gains.iter().sum::<f64>() + 1e-15,
        };
        if better {
            let gains = u.iter().zip(&base).map(|(a, b)| a - b).collect();
            best = Some(ParetoWitness { x: Allocation(x_new), utilities: u, gains, price });
        }
    };

    if restrict_linear_prices {
        for p in price_grid(&economy.supply, resolution, PRICE_FLOOR) {
            let incomes = economy.incomes_at(&p);
            let candidates: Vec<Vec<(Bundle, f64)>> = (0..n - 1)
                .map(|i| {
                    budget_bundles(&p.0, incomes[i], &economy.supply, resolution)
                        .into_iter()
                        .map(|b| {
                            let u = economy.utility(i, &b);
                            (b, u)
                        })
                        .collect()
                })
                .collect();
            if candidates.iter().any(Vec::is_empty) {
                continue;
            }
            product_scan(economy, &candidates, |x_new, u| {
                consider(x_new, u, Some(p.clone()))
            });
        }
    } else {
        let axes: Vec<Vec<f64>> =
            economy.supply.iter().map(|w| linspace(0.0, *w, resolution)).collect();
        let candidates: Vec<Vec<(Bundle, f64)>> = (0..n - 1)
            .map(|i| {
                box_grid(&axes)
                    .into_iter()
                    .map(|b| {
                        let u = economy.utility(i, &b);
                        (b, u)
                    })
                    .collect()
            })
            .collect();
        product_scan(economy, &candidates, |x_new, u| consider(x_new, u, None));
    }
    Ok(best)
}

/// All grid points of the box spanned by `axes`.
fn box_grid(axes: &[Vec<f64>]) -> Vec<Bundle> {
    let mut out: Vec<Bundle> = vec![Vec::new()];
    for axis in axes {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for prefix in &out {
            for v in axis {
                let mut p = prefix.clone();
                p.push(*v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// Iterate the product of per-consumer candidate bundles, forcing the last
/// consumer's bundle by market clearing, and pass each feasible allocation
/// with its utility vector to `visit`.
fn product_scan(
    economy: &Economy,
    candidates: &[Vec<(Bundle, f64)>],
    mut visit: impl FnMut(Vec<Bundle>, Vec<f64>),
) {
    let n = economy.n();
    let k = economy.k();
    let mut chosen = vec![0usize; n - 1];
    loop {
        let mut last = vec![0.0; k];
        let mut feasible = true;
        for g in 0..k {
            let mut v = economy.supply[g];
            for (i, &c) in chosen.iter().enumerate() {
                v -= candidates[i][c].0[g];
            }
            if v < -1e-9 {
                feasible = false;
                break;
            }
            last[g] = if v.abs() < 1e-12 { 0.0 } else { v.max(0.0) };
        }
        if feasible {
            let u_last = economy.utility(n - 1, &last);
            let mut x: Vec<Bundle> =
                chosen.iter().enumerate().map(|(i, &c)| candidates[i][c].0.clone()).collect();
            let mut u: Vec<f64> =
                chosen.iter().enumerate().map(|(i, &c)| candidates[i][c].1).collect();
            x.push(last);
            u.push(u_last);
            visit(x, u);
        }
        let mut d = 0;
        loop {
            if d == n - 1 {
                return;
            }
            chosen[d] += 1;
            if chosen[d] < candidates[d].len() {
                break;
            }
            chosen[d] = 0;
            d += 1;
        }
    }
}

/// Sample the contract surface reachable by linear-price trades: allocations
/// that are budget-exact at some normalized price, individually rational,
/// and undominated within the sampled cloud. Each surviving point carries
/// the exact set of prices consistent with its trades.
///
/// Supports two goods and up to three consumers, endowment economies only.
pub fn contract_surface_sample(
    economy: &Economy,
    resolution: usize,
) -> Result<Vec<ContractPoint>, EconomyError> {
    economy.validate()?;
    let economy = &expression_mirror(economy);
    let n = economy.n();
    if economy.k() != 2 || n > 3 {
        return Err(EconomyError::BadConfig {
            reason: "contract surface sampling supports 2 goods and at most 3 consumers".into(),
        });
    }
    let Some(endowments) = economy.endowments() else {
        return Err(EconomyError::BadConfig {
            reason: "contract surface sampling needs an endowment economy".into(),
        });
    };
    let ir: Vec<f64> =
        endowments.iter().enumerate().map(|(i, o)| economy.utility(i, o)).collect();

    let mut xs: Vec<Vec<Bundle>> = Vec::new();
    let mut points: Vec<Vec<f64>> = Vec::new();
    for p in price_grid(&economy.supply, resolution, PRICE_FLOOR) {
        let incomes = economy.incomes_at(&p);
        let candidates: Vec<Vec<(Bundle, f64)>> = (0..n - 1)
            .map(|i| {
                budget_bundles(&p.0, incomes[i], &economy.supply, resolution)
                    .into_iter()
                    .map(|b| {
                        let u = economy.utility(i, &b);
                        (b, u)
                    })
                    .collect()
            })
            .collect();
        if candidates.iter().any(Vec::is_empty) {
            continue;
        }
        product_scan(economy, &candidates, |x_new, u| {
            if u.iter().zip(&ir).all(|(a, b)| *a >= b - 1e-9) {
                xs.push(x_new);
                points.push(u);
            }
        });
    }

    let flags = maximal_flags(&points, false);
    let mut survivors: Vec<(Vec<Bundle>, Vec<f64>)> = xs
        .into_iter()
        .zip(points)
        .zip(flags)
        .filter(|(_, keep)| *keep)
        .map(|(pair, _)| pair)
        .collect();
    // Deduplicate allocations that several prices generated.
    survivors.sort_by(|a, b| {
        let fa: Vec<f64> = a.0.iter().flatten().copied().collect();
        let fb: Vec<f64> = b.0.iter().flatten().copied().collect();
        fa.partial_cmp(&fb).unwrap_or(std::cmp::Ordering::Equal)
    });
    survivors.dedup_by(|a, b| {
        a.0.iter()
            .flatten()
            .zip(b.0.iter().flatten())
            .all(|(x, y)| (x - y).abs() < 1e-9)
    });

    Ok(survivors
        .into_iter()
        .map(|(x, utilities)| {
            let allocation = Allocation(x);
            let price_set = linear_price_consistent(&allocation, endowments, &economy.supply);
            ContractPoint { x: allocation, utilities, price_set }
        })
        .collect())
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::economies;

    #[test]
    fn restricted_indirect_caps_bind() {
        // u = max(2x, y) on [0,1]²: the envelope of budget-line optima is
        // max(2·min(1, m/p), min(1, m/q)).
        let u = Utility::MaxLinear { coefficients: vec![2.0, 1.0] };
        let caps = [1.0, 1.0];
        let p = [2.0 / 3.0, 1.0 / 3.0];
        let v = restricted_indirect(&u, &p, 1.0 / 3.0, &caps, 400);
        assert!((v - 1.0).abs() < 1e-9, "kink income: both branches reach exactly 1, got {v}");
        let v = restricted_indirect(&u, &p, 0.5, &caps, 400);
        assert!((v - 1.5).abs() < 1e-9, "good-1 branch: 2·(0.5/(2/3)) = 1.5, got {v}");
    }

    #[test]
    fn restricted_indirect_smooth_interior() {
        // Cobb-Douglas x^{2/3}y^{1/3} at p = (2/3, 1/3), m = 1: uncapped
        // demand is (1, 1), utility 1. Caps (1,1) just barely admit it.
        let u = Utility::CobbDouglas { exponents: vec![2.0 / 3.0, 1.0 / 3.0] };
        let v = restricted_indirect(&u, &[2.0 / 3.0, 1.0 / 3.0], 1.0, &[1.0, 1.0], 400);
        assert!((v - 1.0).abs() < 1e-6, "got {v}");
    }

    #[test]
    fn maximal_flags_two_dimensional() {
        let pts = vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.5, 0.5],
            vec![0.4, 0.4], // dominated by (0.5, 0.5)
            vec![1.0, 0.0], // duplicate of a frontier point: also kept
        ];
        let flags = maximal_flags(&pts, false);
        assert_eq!(flags, vec![true, true, true, false, true]);
    }

    #[test]
    fn maximal_flags_three_dimensional_matches_quadratic() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Vec<f64>> = (0..400)
            .map(|_| {
                (0..3)
                    .map(|_| (rng.random_range(0..20) as f64) / 10.0)
                    .collect()
            })
            .collect();
        let fast = maximal_flags(&pts, false);
        let slow: Vec<bool> = (0..pts.len())
            .map(|i| {
                !pts.iter().enumerate().any(|(j, q)| {
                    j != i
                        && q.iter().zip(&pts[i]).all(|(a, b)| *a >= *b)
                        && q.iter().zip(&pts[i]).any(|(a, b)| *a > *b + 1e-12)
                })
            })
            .collect();
        assert_eq!(fast, slow);
    }

    #[test]
    fn ups_frontier_of_leontief_pair_is_the_diagonal_tradeoff() {
        let economy = economies::leontief_pair();
        let cloud = sample_ups(&economy, 41).unwrap();
        // Frontier: u1 + u2 = 1 (split the diagonal).
        for (u, f) in cloud.points.iter().zip(&cloud.frontier) {
            if *f {
                assert!(
                    (u[0] + u[1] - 1.0).abs() < 1e-9,
                    "frontier point off the diagonal: {u:?}"
                );
            }
        }
        assert!(cloud.frontier.iter().filter(|f| **f).count() >= 41);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let economy = economies::leontief_pair();
        let cloud = sample_ups(&economy, 5).unwrap();
        let csv = cloud.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("u_1,u_2,frontier,x1_x,x1_y,x2_x,x2_y"));
        assert_eq!(csv.lines().count(), cloud.points.len() + 1);
    }

    #[test]
    fn brute_force_finds_the_smooth_pair_equilibrium() {
        // Closed form: p1 = (1 + ω12)/(3 − ω11 + ω12) = 0.5 at ω1 = (0.5, 0.5).
        let economy = economies::cobb_douglas_pair([0.5, 0.5]);
        let sol = brute_force_equilibrium(&economy, Mode::Walrasian, 200).unwrap();
        assert!((sol.p.0[0] - 0.5).abs() < 2e-3, "p = {:?}", sol.p);
        assert!(sol.potential.abs() < 1e-6, "Y = {}", sol.potential);
    }

    #[test]
    fn brute_force_handles_full_price_multiplicity() {
        let economy = economies::leontief_pair();
        let sol = brute_force_equilibrium(&economy, Mode::Walrasian, 100).unwrap();
        // Every price ties; the primary is the floor-clamped lexicographic
        // minimum and the allocation is the forced diagonal split.
        assert!(sol.p.0[0] <= 2e-6, "p = {:?}", sol.p);
        assert!(sol.potential.abs() < 1e-9);
        assert!(sol.ties.len() >= 90, "expected a full plateau, got {}", sol.ties.len());
        for xi in &sol.x.0 {
            assert!((xi[0] - 0.5).abs() < 1e-6 && (xi[1] - 0.5).abs() < 1e-6);
        }
    }

    #[test]
    fn pareto_search_finds_the_obvious_trade() {
        // Start both ticket collectors at their endowments: concentrating
        // kinds is a strict improvement for both.
        let economy = economies::ticket_traders();
        let x = Allocation(vec![vec![2.0, 2.0], vec![1.0, 1.0]]);
        let witness = pareto_improvement_search(&economy, &x, 61, false, 1e-3)
            .unwrap()
            .expect("a Pareto improvement exists");
        assert!(witness.gains.iter().all(|g| *g >= -1e-9));
        assert!(witness.gains.iter().any(|g| *g > 0.5));
    }

    #[test]
    fn pareto_search_confirms_frontier_points() {
        // An equal diagonal split for the complementary-goods pair is Pareto
        // optimal: no witness at any reasonable resolution.
        let economy = economies::leontief_pair();
        let x = Allocation(vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
        let witness = pareto_improvement_search(&economy, &x, 41, false, 1e-3).unwrap();
        assert!(witness.is_none(), "got {witness:?}");
    }
}
