//! Machine-readable run reports.
//!
//! Every command that computes something emits a [`RunReport`]: the
//! invocation, the exact solver configuration, a digest of the input
//! economy, and the results. Reports serialize to JSON and parse back
//! losslessly, so downstream tooling can archive and replay them. The only
//! field expected to differ between two runs with equal seed and
//! configuration is `wall_time_ms`.

use serde::{Deserialize, Serialize};

use edgeworth::economy::io::economy_to_json;
use edgeworth::oracle::{ContractPoint, PointCloud};
use edgeworth::solver::{EquilibriumResult, NegishiOutcome};
use edgeworth::{Economy, Ownership, SolverConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    /// The command line that produced this report (program name omitted).
    pub command: String,
    /// Version of the solver library that computed the results.
    pub library_version: String,
    /// Seed used by all randomized stages.
    pub seed: u64,
    /// Full solver configuration after command-line overrides.
    pub config: SolverConfig,
    /// What was solved.
    pub economy: EconomyDigest,
    pub results: ReportBody,
    /// Human-readable caveats; never affect the exit code by themselves.
    pub warnings: Vec<String>,
    /// Wall-clock time of the computation in milliseconds. Excluded from
    /// reproducibility comparisons.
    pub wall_time_ms: f64,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("reports are plain data");
        out.push('\n');
        out
    }
}

/// Summary of the input economy, detailed enough to recognize the instance
/// without embedding the whole file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EconomyDigest {
    pub goods: Vec<String>,
    pub supply: Vec<f64>,
    pub consumers: usize,
    /// Utility family of each consumer, in order.
    pub families: Vec<String>,
    /// `"incomes"` or `"endowments"`.
    pub ownership: String,
    /// FNV-1a hash (hex) of the canonical JSON form; identifies the exact
    /// instance across runs and machines.
    pub content_hash: String,
}

impl EconomyDigest {
    pub fn of(economy: &Economy) -> Self {
        let canonical = economy_to_json(economy);
        EconomyDigest {
            goods: economy.goods.clone(),
            supply: economy.supply.clone(),
            consumers: economy.n(),
            families: economy.utilities.iter().map(|u| u.family().to_string()).collect(),
            ownership: match economy.ownership {
                Ownership::Incomes(_) => "incomes".to_string(),
                Ownership::Endowments(_) => "endowments".to_string(),
            },
            content_hash: format!("{:016x}", fnv1a64(canonical.as_bytes())),
        }
    }
}

/// Results payload, tagged by shape.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ReportBody {
    /// One entry per solution (the endowment solver can return several
    /// income-consistent fixed points).
    Equilibria { equilibria: Vec<EquilibriumResult> },
    /// Welfare-weight iteration outcome with its trace.
    WeightIteration { outcome: NegishiOutcome },
    /// A sampled utility cloud.
    Cloud { cloud: PointCloud },
    /// Sampled efficient trades with their supporting prices.
    Contract { points: Vec<ContractPoint> },
}

/// 64-bit FNV-1a: tiny, dependency-free, stable across platforms — exactly
/// what a content fingerprint in a report needs.
fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// CSV rendering of equilibrium results: one row per solution, columns for
/// prices, incomes, utilities and the flattened allocation.
pub fn equilibria_to_csv(results: &[EquilibriumResult], goods: &[String]) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let n = results.first().map_or(0, |r| r.m.0.len());
    let mut headers: Vec<String> = vec!["kind".into(), "potential".into(), "multiple".into()];
    headers.extend(goods.iter().map(|g| format!("p_{g}")));
    headers.extend((1..=n).map(|i| format!("m_{i}")));
    headers.extend((1..=n).map(|i| format!("u_{i}")));
    for i in 1..=n {
        headers.extend(goods.iter().map(|g| format!("x_{i}_{g}")));
    }
    let _ = writeln!(out, "{}", headers.join(","));
    for r in results {
        let mut cells: Vec<String> = vec![
            format!("{:?}", r.kind).to_lowercase(),
            format!("{}", r.potential),
            format!("{}", r.multiple),
        ];
        cells.extend(r.p.0.iter().map(|v| format!("{v}")));
        cells.extend(r.m.0.iter().map(|v| format!("{v}")));
        cells.extend(r.utilities.iter().map(|v| format!("{v}")));
        for xi in &r.x.0 {
            cells.extend(xi.iter().map(|v| format!("{v}")));
        }
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// CSV rendering of a weight-iteration trace: one row per outer step.
pub fn negishi_to_csv(outcome: &NegishiOutcome, goods: &[String]) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let n = outcome.weights.len();
    let mut headers: Vec<String> = vec!["iteration".into()];
    headers.extend(goods.iter().map(|g| format!("p_{g}")));
    headers.extend((1..=n).map(|i| format!("alpha_{i}")));
    headers.push("value".into());
    let _ = writeln!(out, "{}", headers.join(","));
    for (step, s) in outcome.trace.iter().enumerate() {
        let mut cells: Vec<String> = vec![format!("{}", step + 1)];
        cells.extend(s.p.0.iter().map(|v| format!("{v}")));
        cells.extend(s.weights.iter().map(|v| format!("{v}")));
        cells.push(format!("{}", s.value));
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// CSV rendering of contract-surface samples: utilities, the flattened
/// allocation, and the lexicographically smallest supporting price (empty
/// cells when no linear price supports the trade).
pub fn contract_to_csv(points: &[ContractPoint], goods: &[String]) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let n = points.first().map_or(0, |c| c.utilities.len());
    let mut headers: Vec<String> = (1..=n).map(|i| format!("u_{i}")).collect();
    for i in 1..=n {
        headers.extend(goods.iter().map(|g| format!("x_{i}_{g}")));
    }
    headers.push("supported".into());
    headers.extend(goods.iter().map(|g| format!("p_{g}")));
    let _ = writeln!(out, "{}", headers.join(","));
    for c in points {
        let mut cells: Vec<String> = c.utilities.iter().map(|v| format!("{v}")).collect();
        for xi in &c.x.0 {
            cells.extend(xi.iter().map(|v| format!("{v}")));
        }
        let rep = c.price_set.as_ref().and_then(|s| s.representative());
        cells.push(if c.price_set.is_some() { "1".into() } else { "0".into() });
        match rep {
            Some(p) => cells.extend(p.0.iter().map(|v| format!("{v}"))),
            None => cells.extend(std::iter::repeat_n(String::new(), goods.len())),
        }
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}
