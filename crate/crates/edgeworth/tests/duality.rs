//! Cross-family checks of the value layer: homogeneity and monotonicity of
//! indirect utility, and the defining properties of the quasiconcave
//! envelope (dominance, quasiconcavity, fixed points, preserved values).

use edgeworth::duality::{dual_utility, indirect_utility, quasiconcavify};
use edgeworth::economy::expr;
use edgeworth::Utility;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn custom(text: &str) -> Utility {
    Utility::Custom { text: text.to_string(), ast: expr::parse(text).expect("parses") }
}

/// One representative of every closed-form family plus a parsed expression.
fn families() -> Vec<(&'static str, Utility)> {
    vec![
        ("cobb-douglas", Utility::CobbDouglas { exponents: vec![1.0, 0.5] }),
        ("leontief", Utility::Leontief { requirements: vec![1.0, 1.0] }),
        ("max-linear", Utility::MaxLinear { coefficients: vec![2.0, 1.0] }),
        ("linear", Utility::Linear { coefficients: vec![1.0, 2.0] }),
        ("fenchel", Utility::Fenchel),
        ("custom", custom("x + sqrt(y + x*x)")),
    ]
}

#[test]
fn indirect_utility_ignores_the_price_scale() {
    let supply = [1.0, 1.0];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (name, u) in families() {
        for _ in 0..40 {
            let p1: f64 = rng.random_range(0.05..0.95);
            let p = [p1, 1.0 - p1];
            let m: f64 = rng.random_range(0.05..0.95);
            for restricted in [false, true] {
                let base = indirect_utility(&u, &p, m, &supply, restricted);
                for lambda in [0.5, 2.0, 10.0] {
                    let scaled = indirect_utility(
                        &u,
                        &[lambda * p[0], lambda * p[1]],
                        lambda * m,
                        &supply,
                        restricted,
                    );
                    assert!(
                        (scaled - base).abs() < 1e-6 * (1.0 + base.abs()),
                        "{name} restricted={restricted}: v({lambda}p, {lambda}m) = {scaled} \
                         but v(p, m) = {base} at p = {p:?}, m = {m}"
                    );
                }
            }
        }
    }
    // The numeric envelope path stays scale-free too, at a smaller sample.
    let wrapped = quasiconcavify(Utility::MaxLinear { coefficients: vec![2.0, 1.0] }, &supply);
    for _ in 0..3 {
        let p1: f64 = rng.random_range(0.2..0.8);
        let p = [p1, 1.0 - p1];
        let m: f64 = rng.random_range(0.2..0.8);
        for restricted in [false, true] {
            let base = indirect_utility(&wrapped, &p, m, &supply, restricted);
            for lambda in [0.5, 2.0, 10.0] {
                let scaled = indirect_utility(
                    &wrapped,
                    &[lambda * p[0], lambda * p[1]],
                    lambda * m,
                    &supply,
                    restricted,
                );
                assert!(
                    (scaled - base).abs() < 1e-6 * (1.0 + base.abs()),
                    "envelope restricted={restricted}: {scaled} vs {base}"
                );
            }
        }
    }
}

#[test]
fn indirect_utility_falls_with_prices_and_rises_with_income() {
    let supply = [1.0, 1.0];
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for (name, u) in families() {
        for _ in 0..30 {
            let p = [rng.random_range(0.1..0.9), rng.random_range(0.1..0.9)];
            let m: f64 = rng.random_range(0.1..0.8);
            let base = indirect_utility(&u, &p, m, &supply, false);
            for k in 0..2 {
                let mut dearer = p;
                dearer[k] *= 1.25;
                let worse = indirect_utility(&u, &dearer, m, &supply, false);
                assert!(
                    worse <= base + 1e-9,
                    "{name}: raising p_{k} from {:?} improved v: {worse} > {base}",
                    p
                );
            }
            let richer = indirect_utility(&u, &p, 1.2 * m, &supply, false);
            assert!(
                richer > base + 1e-12,
                "{name}: extra income did not help at p = {p:?}, m = {m}: {richer} vs {base}"
            );
        }
    }
}

#[test]
fn envelope_dominates_its_source_and_mixes_quasiconcavely() {
    let supply = vec![1.0, 1.0];
    for (name, source) in [
        ("max-linear", Utility::MaxLinear { coefficients: vec![2.0, 1.0] }),
        ("custom nonconcave", custom("max(x, y)")),
    ] {
        let wrapped = quasiconcavify(source.clone(), &supply);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..500 {
            let a = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
            let b = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
            let ua = wrapped.eval(&a);
            let ub = wrapped.eval(&b);
            assert!(
                ua >= source.eval(&a) - 1e-9,
                "{name}: envelope dips below the source at {a:?}"
            );
            for t in [0.25, 0.5, 0.75] {
                let mix = [t * a[0] + (1.0 - t) * b[0], t * a[1] + (1.0 - t) * b[1]];
                let um = wrapped.eval(&mix);
                assert!(
                    um >= ua.min(ub) - 1e-3,
                    "{name}: envelope fails quasiconcavity between {a:?} and {b:?} \
                     at t = {t}: {um} < min({ua}, {ub})"
                );
            }
        }
    }
}

#[test]
fn envelope_fixes_quasiconcave_families() {
    let supply = vec![1.0, 1.0];
    for (name, u) in [
        ("cobb-douglas", Utility::CobbDouglas { exponents: vec![2.0 / 3.0, 1.0 / 3.0] }),
        ("leontief", Utility::Leontief { requirements: vec![1.0, 1.0] }),
        ("linear", Utility::Linear { coefficients: vec![1.0, 2.0] }),
        ("fenchel", Utility::Fenchel),
    ] {
        for i in 0..20 {
            for j in 0..20 {
                let x = [i as f64 / 19.0, j as f64 / 19.0];
                let direct = u.eval(&x);
                let enveloped = dual_utility(&u, &x, &supply);
                assert!(
                    enveloped >= direct - 1e-9,
                    "{name}: envelope dips below the source at {x:?}"
                );
                assert!(
                    (enveloped - direct).abs() < 1e-3,
                    "{name}: envelope moved a quasiconcave utility at {x:?}: \
                     {enveloped} vs {direct}"
                );
            }
        }
    }
}

#[test]
fn wrapping_preserves_the_restricted_indirect_utility() {
    let supply = [1.0, 1.0];
    let source = Utility::MaxLinear { coefficients: vec![2.0, 1.0] };
    let wrapped = quasiconcavify(source.clone(), &supply);
    for p1 in [0.2, 1.0 / 3.0, 0.5, 2.0 / 3.0, 0.8] {
        let p = [p1, 1.0 - p1];
        for m in [0.2, 1.0 / 3.0, 0.5, 0.75] {
            let of_source = indirect_utility(&source, &p, m, &supply, true);
            let of_wrapped = indirect_utility(&wrapped, &p, m, &supply, true);
            assert!(
                (of_wrapped - of_source).abs() <= 1e-3,
                "p1 = {p1}, m = {m}: wrapped v = {of_wrapped}, source v = {of_source}"
            );
        }
    }
}
