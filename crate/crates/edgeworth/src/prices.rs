//! Price geometry: the normalized price simplex, budget segments, and the
//! set of prices consistent with a given pattern of trades.
//!
//! Prices are always normalized so the supply bundle costs one, `⟨p|w⟩ = 1`.
//! For two goods that leaves a single degree of freedom, the *budget share*
//! `b = p_1 w_1 ∈ (0, 1)`: the fraction of total wealth carried by good 1.

use crate::economy::{Allocation, Bundle, PriceVector};

/// The set of normalized prices at which every consumer's bundle has exactly
/// the value of their endowment. It is a (possibly empty) compact polytope;
/// this type reports it by its extreme points.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriceSet {
    /// No trade happens at all, so every normalized price is consistent.
    FullSimplex,
    /// Exactly one consistent price.
    Point(PriceVector),
    /// A line segment of consistent prices, given by its two endpoints.
    Segment(PriceVector, PriceVector),
    /// A higher-dimensional face of the simplex, given by its extreme points.
    Region(Vec<PriceVector>),
}

impl PriceSet {
    /// A canonical representative: the lexicographically smallest extreme
    /// point (or `None` for the full simplex, which has no distinguished
    /// price).
    pub fn representative(&self) -> Option<&PriceVector> {
        match self {
            PriceSet::FullSimplex => None,
            PriceSet::Point(p) => Some(p),
            PriceSet::Segment(a, b) => Some(if lex_le(&a.0, &b.0) { a } else { b }),
            PriceSet::Region(ps) => ps.iter().min_by(|a, b| lex_cmp(&a.0, &b.0)),
        }
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(ord) => return ord,
        }
    }
    std::cmp::Ordering::Equal
}

/// Lexicographic `a ≤ b` on coordinate vectors, used for deterministic
/// tie-breaking everywhere.
pub fn lex_le(a: &[f64], b: &[f64]) -> bool {
    lex_cmp(a, b) != std::cmp::Ordering::Greater
}

/// All normalized prices `p ≥ 0`, `⟨p|w⟩ = 1` with `⟨p|x_i⟩ = ⟨p|ω_i⟩` for
/// every consumer, or `None` if no such price exists.
///
/// The conditions are linear, so the answer is a face of the price simplex:
/// the affine solution space of the trade equations is computed by Gaussian
/// elimination and intersected with the nonnegative orthant by enumerating
/// basic solutions.
pub fn linear_price_consistent(
    x: &Allocation,
    endowments: &[Bundle],
    supply: &[f64],
) -> Option<PriceSet> {
    let k = supply.len();
    let trades: Vec<Vec<f64>> = x
        .0
        .iter()
        .zip(endowments)
        .map(|(xi, oi)| xi.iter().zip(oi).map(|(a, b)| a - b).collect())
        .collect();
    if trades.iter().all(|t| t.iter().all(|v| v.abs() <= 1e-9)) {
        return Some(PriceSet::FullSimplex);
    }

    // Equality system: ⟨p|t_i⟩ = 0 for each consumer, ⟨p|w⟩ = 1.
    let mut rows = trades;
    let mut rhs = vec![0.0; rows.len()];
    rows.push(supply.to_vec());
    rhs.push(1.0);

    let (particular, nullspace) = affine_solve(&rows, &rhs)?;
    if nullspace.is_empty() {
        let p = clamp_nonnegative(&particular)?;
        return Some(PriceSet::Point(PriceVector(p)));
    }

    // The polytope {p ≥ 0 : rows·p = rhs} is bounded (it sits inside the
    // price simplex), so it is the convex hull of its vertices, and every
    // vertex has at least `d = dim(nullspace)` zero coordinates. Enumerate
    // the candidate zero-sets.
    let d = nullspace.len();
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    for zero_set in subsets(k, d) {
        let mut sys = rows.clone();
        let mut sys_rhs = rhs.clone();
        for &j in &zero_set {
            let mut pin = vec![0.0; k];
            pin[j] = 1.0;
            sys.push(pin);
            sys_rhs.push(0.0);
        }
        let Some((sol, null)) = affine_solve(&sys, &sys_rhs) else { continue };
        if !null.is_empty() {
            continue; // degenerate pin, the vertex shows up via another set
        }
        let Some(p) = clamp_nonnegative(&sol) else { continue };
        if !vertices.iter().any(|v| max_abs_diff(v, &p) < 1e-7) {
            vertices.push(p);
        }
    }
    vertices.sort_by(|a, b| lex_cmp(a, b));
    match vertices.len() {
        0 => None,
        1 => Some(PriceSet::Point(PriceVector(vertices.pop().unwrap()))),
        2 => {
            let b = vertices.pop().unwrap();
            let a = vertices.pop().unwrap();
            Some(PriceSet::Segment(PriceVector(a), PriceVector(b)))
        }
        _ => Some(PriceSet::Region(vertices.into_iter().map(PriceVector).collect())),
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn clamp_nonnegative(p: &[f64]) -> Option<Vec<f64>> {
    if p.iter().any(|v| *v < -1e-9) {
        return None;
    }
    Some(p.iter().map(|v| v.max(0.0)).collect())
}

/// All `d`-element subsets of `0..k`, in lexicographic order.
fn subsets(k: usize, d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn rec(start: usize, k: usize, d: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == d {
            out.push(current.clone());
            return;
        }
        for j in start..k {
            current.push(j);
            rec(j + 1, k, d, current, out);
            current.pop();
        }
    }
    rec(0, k, d, &mut current, &mut out);
    out
}

/// Solve the linear system `rows·p = rhs` by Gauss-Jordan elimination.
/// Returns a particular solution and a basis of the homogeneous solutions,
/// or `None` if the system is inconsistent. Designed for the tiny systems
/// here (at most a handful of rows and four columns).
fn affine_solve(rows: &[Vec<f64>], rhs: &[f64]) -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
    let k = rows.first().map_or(0, Vec::len);
    let mut a: Vec<Vec<f64>> = rows
        .iter()
        .zip(rhs)
        .map(|(r, b)| {
            let mut row = r.clone();
            row.push(*b);
            row
        })
        .collect();
    let scale = a
        .iter()
        .flat_map(|r| r.iter().map(|v| v.abs()))
        .fold(1.0, f64::max);
    let tol = 1e-11 * scale;

    let mut pivot_col_of_row = Vec::new();
    let mut row = 0;
    for col in 0..k {
        let Some(best) = (row..a.len())
            .filter(|r| a[*r][col].abs() > tol)
            .max_by(|r, s| a[*r][col].abs().total_cmp(&a[*s][col].abs()))
        else {
            continue;
        };
        a.swap(row, best);
        let piv = a[row][col];
        for v in a[row].iter_mut() {
            *v /= piv;
        }
        for r in 0..a.len() {
            if r != row && a[r][col].abs() > 0.0 {
                let factor = a[r][col];
                for c in 0..=k {
                    let sub = factor * a[row][c];
                    a[r][c] -= sub;
                }
            }
        }
        pivot_col_of_row.push(col);
        row += 1;
        if row == a.len() {
            break;
        }
    }
    // Inconsistent if a zero row has a nonzero right-hand side.
    for r in row..a.len() {
        if a[r][k].abs() > tol {
            return None;
        }
    }

    let mut particular = vec![0.0; k];
    for (r, &col) in pivot_col_of_row.iter().enumerate() {
        particular[col] = a[r][k];
    }
    let pivot_cols: Vec<usize> = pivot_col_of_row.clone();
    let mut nullspace = Vec::new();
    for free in (0..k).filter(|c| !pivot_cols.contains(c)) {
        let mut basis = vec![0.0; k];
        basis[free] = 1.0;
        for (r, &col) in pivot_col_of_row.iter().enumerate() {
            basis[col] = -a[r][free];
        }
        nullspace.push(basis);
    }
    Some((particular, nullspace))
}

/// Two-good normalized price from its budget share: `p = (b/w_1, (1−b)/w_2)`.
pub fn price_from_share(b: f64, supply: &[f64]) -> PriceVector {
    PriceVector(vec![b / supply[0], (1.0 - b) / supply[1]])
}

/// Budget share of a two-good normalized price.
pub fn share_of_price(p: &PriceVector, supply: &[f64]) -> f64 {
    p.0[0] * supply[0]
}

/// Admissible budget-share range for two goods when every normalized price
/// must be at least `floor`.
pub fn share_bounds(supply: &[f64], floor: f64) -> (f64, f64) {
    (floor * supply[0], 1.0 - floor * supply[1])
}

/// The box-clipped budget segment for two goods, in good-1 coordinates:
/// bundles `(x, (m − p_1 x)/p_2)` with `0 ≤ x ≤ cap_1` and the second
/// coordinate in `[0, cap_2]`. Returns the interval of admissible `x`, or
/// `None` when the budget line misses the box entirely.
pub fn budget_segment(p: &[f64], m: f64, caps: &[f64]) -> Option<(f64, f64)> {
    debug_assert_eq!(p.len(), 2);
    // Emptiness is decided in cost space: comparing derived coordinates
    // amplifies the cancellation in `m − p_2·cap_2` by `1/p_1` when the first
    // price is tiny, misreporting a barely-affordable box (e.g. income equal
    // to the value of the whole box) as out of reach.
    let box_cost = p[0] * caps[0] + p[1] * caps[1];
    if m > box_cost + 1e-12 * (1.0 + m.abs() + box_cost) {
        return None;
    }
    let hi = if p[0] > 0.0 { (m / p[0]).min(caps[0]) } else { caps[0] };
    let lo = if p[0] > 0.0 { ((m - p[1] * caps[1]) / p[0]).clamp(0.0, hi.max(0.0)) } else { 0.0 };
    Some((lo, hi.max(lo)))
}

/// Evenly spaced values covering `[lo, hi]`, endpoints included.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 || hi <= lo {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    let mut out: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
    out[n - 1] = hi;
    out
}

/// Grid over the normalized price simplex `{p ≥ floor : ⟨p|w⟩ = 1}` with
/// about `res` points per axis. For two goods this is a uniform grid in the
/// budget share; in higher dimension it enumerates share compositions.
pub fn price_grid(supply: &[f64], res: usize, floor: f64) -> Vec<PriceVector> {
    let k = supply.len();
    if k == 1 {
        return vec![PriceVector(vec![1.0 / supply[0]])];
    }
    if k == 2 {
        let (lo, hi) = share_bounds(supply, floor);
        return linspace(lo, hi, res).into_iter().map(|b| price_from_share(b, supply)).collect();
    }
    // General K: shares b_k ≥ floor·w_k summing to 1, stepped uniformly.
    let mut out = Vec::new();
    let mins: Vec<f64> = supply.iter().map(|w| floor * w).collect();
    let slack = 1.0 - mins.iter().sum::<f64>();
    let mut shares = vec![0usize; k];
    fn rec(
        idx: usize,
        left: usize,
        res: usize,
        shares: &mut Vec<usize>,
        mins: &[f64],
        slack: f64,
        supply: &[f64],
        out: &mut Vec<PriceVector>,
    ) {
        if idx == shares.len() - 1 {
            shares[idx] = left;
            let p: Vec<f64> = shares
                .iter()
                .zip(mins.iter().zip(supply))
                .map(|(s, (min, w))| (min + slack * *s as f64 / res as f64) / w)
                .collect();
            out.push(PriceVector(p));
            return;
        }
        for s in 0..=left {
            shares[idx] = s;
            rec(idx + 1, left - s, res, shares, mins, slack, supply, out);
        }
    }
    rec(0, res, res, &mut shares, &mins, slack, supply, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::economy::normalize_prices;

    #[test]
    fn no_trade_means_any_price() {
        let supply = vec![1.0, 1.0];
        let omega = vec![vec![0.3, 0.7], vec![0.7, 0.3]];
        let x = Allocation(omega.clone());
        assert_eq!(linear_price_consistent(&x, &omega, &supply), Some(PriceSet::FullSimplex));
    }

    #[test]
    fn two_party_trade_pins_the_price() {
        // Consumer 1 gives 0.2 of good 1 for 0.4 of good 2: the only
        // consistent relative price is p1 = 2·p2.
        let supply = vec![1.0, 1.0];
        let omega = vec![vec![0.5, 0.1], vec![0.5, 0.9]];
        let x = Allocation(vec![vec![0.3, 0.5], vec![0.7, 0.5]]);
        match linear_price_consistent(&x, &omega, &supply) {
            Some(PriceSet::Point(p)) => {
                assert!((p.0[0] - 2.0 / 3.0).abs() < 1e-9);
                assert!((p.0[1] - 1.0 / 3.0).abs() < 1e-9);
            }
            other => panic!("expected a single price, got {other:?}"),
        }
    }

    #[test]
    fn value_destroying_trades_have_no_price() {
        // Consumer 1 hands over goods and receives nothing back: any positive
        // price values the trade negatively, and the zero-price corners are
        // excluded by the other consumer's opposite trade.
        let supply = vec![1.0, 1.0];
        let omega = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        let x = Allocation(vec![vec![0.3, 0.3], vec![0.7, 0.7]]);
        assert_eq!(linear_price_consistent(&x, &omega, &supply), None);
    }

    #[test]
    fn one_sided_good_transfer_gives_a_segment() {
        // Only good 2 moves: consistency forces p2 = 0, leaving the edge of
        // the simplex where p1 spans the normalization constraint. With two
        // goods that edge is a single point.
        let supply = vec![1.0, 1.0];
        let omega = vec![vec![0.5, 0.1], vec![0.5, 0.9]];
        let x = Allocation(vec![vec![0.5, 0.4], vec![0.5, 0.6]]);
        match linear_price_consistent(&x, &omega, &supply) {
            Some(PriceSet::Point(p)) => {
                assert!((p.0[0] - 1.0).abs() < 1e-9);
                assert!(p.0[1].abs() < 1e-9);
            }
            other => panic!("expected the p2 = 0 corner, got {other:?}"),
        }
    }

    #[test]
    fn three_goods_single_trade_gives_a_region() {
        // Consumers swap goods 1 and 2 one-for-one; good 3 never moves. The
        // consistent prices form the face p1 = p2 of the simplex, a segment
        // from (1/2, 1/2, 0)-ish to (0, 0, 1) in normalized coordinates.
        let supply = vec![1.0, 1.0, 1.0];
        let omega = vec![vec![0.6, 0.4, 0.5], vec![0.4, 0.6, 0.5]];
        let x = Allocation(vec![vec![0.5, 0.5, 0.5], vec![0.5, 0.5, 0.5]]);
        match linear_price_consistent(&x, &omega, &supply) {
            Some(PriceSet::Segment(a, b)) => {
                for p in [&a, &b] {
                    assert!((p.0[0] - p.0[1]).abs() < 1e-9, "face p1 = p2, got {p:?}");
                }
                assert!(max_abs_diff(&a.0, &b.0) > 0.1);
            }
            other => panic!("expected a segment, got {other:?}"),
        }
    }

    #[test]
    fn trio_classical_trades_have_no_price_but_adjusted_ones_do() {
        // Three consumers endowed with (0.1, 0.1), (0.8, 0.1), (0.1, 0.8).
        // The family x1 = (α, 0), x2 = (0, α), x3 = (1−α, 1−α) admits no
        // consistent price for α ∈ [0.4, 0.9], while replacing consumer 1's
        // bundle with (β, 0), β = (10α + 7)/(100α − 10), restores one with
        // price ratio (10α − 1)/8.
        let supply = vec![1.0, 1.0];
        let omega = vec![vec![0.1, 0.1], vec![0.8, 0.1], vec![0.1, 0.8]];
        for alpha in [0.4, 0.5, 0.65, 0.9] {
            let x = Allocation(vec![
                vec![alpha, 0.0],
                vec![0.0, alpha],
                vec![1.0 - alpha, 1.0 - alpha],
            ]);
            assert_eq!(linear_price_consistent(&x, &omega, &supply), None, "alpha={alpha}");

            let beta = (10.0 * alpha + 7.0) / (100.0 * alpha - 10.0);
            let adjusted = Allocation(vec![
                vec![beta, 0.0],
                vec![0.0, alpha],
                vec![1.0 - beta, 1.0 - alpha],
            ]);
            match linear_price_consistent(&adjusted, &omega, &supply) {
                Some(PriceSet::Point(p)) => {
                    let ratio = p.0[0] / p.0[1];
                    let expected = (10.0 * alpha - 1.0) / 8.0;
                    assert!(
                        (ratio - expected).abs() < 1e-9,
                        "alpha={alpha}: ratio {ratio} vs {expected}"
                    );
                }
                other => panic!("alpha={alpha}: expected a single price, got {other:?}"),
            }
        }
    }

    #[test]
    fn representative_is_lexicographically_smallest() {
        let a = PriceVector(vec![0.2, 0.8]);
        let b = PriceVector(vec![0.6, 0.4]);
        let set = PriceSet::Segment(b.clone(), a.clone());
        assert_eq!(set.representative(), Some(&a));
    }

    #[test]
    fn budget_segment_clips_to_the_box() {
        let p = normalize_prices(&[0.5, 0.5], &[1.0, 1.0]).unwrap();
        // Income 0.75: spending everything on either good stays inside.
        let (lo, hi) = budget_segment(&p.0, 0.75, &[1.0, 1.0]).unwrap();
        assert!((lo - 0.5).abs() < 1e-12, "must buy ≥ 0.5 of good 1 once good 2 is capped");
        assert!((hi - 1.0).abs() < 1e-12);
        // Income beyond the whole box: no budget-exact bundle exists.
        assert!(budget_segment(&p.0, 1.1, &[1.0, 1.0]).is_none());
    }

    #[test]
    fn price_grids_respect_floors_and_normalization() {
        let supply = vec![2.0, 1.0];
        for p in price_grid(&supply, 33, 1e-6) {
            assert!(p.0.iter().all(|v| *v >= 1e-6 - 1e-15));
            assert!((crate::economy::dot(&p.0, &supply) - 1.0).abs() < 1e-9);
        }
        let supply3 = vec![1.0, 1.0, 1.0];
        let grid = price_grid(&supply3, 12, 1e-6);
        assert!(grid.len() > 50);
        for p in &grid {
            assert!((crate::economy::dot(&p.0, &supply3) - 1.0).abs() < 1e-9);
            assert!(p.0.iter().all(|v| *v >= 1e-6 - 1e-15));
        }
    }

    #[test]
    fn linspace_touches_both_ends() {
        let xs = linspace(0.25, 0.75, 5);
        assert_eq!(xs.first().copied(), Some(0.25));
        assert_eq!(xs.last().copied(), Some(0.75));
        assert_eq!(xs.len(), 5);
    }
}
