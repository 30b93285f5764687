//! Bundled demonstration data sets.
//!
//! Each demo writes the CSV files needed to re-plot one of the bundled
//! showcase economies and prints the closed-form reference values next to
//! the computed ones. All output is deterministic for a fixed seed and
//! configuration, so the files double as golden fixtures.

use std::fmt::Write as _;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};

use edgeworth::economies::{
    cobb_douglas_pair, cobb_douglas_pair_price, fenchel_pair, fenchel_pair_price, mixed_pair,
    mixed_pair_reference,
};
use edgeworth::oracle::{sample_ups, sample_vps};
use edgeworth::solver::{dual_negishi_minimize, solve_walrasian_income, solve_yquilibrium};
use edgeworth::{Economy, SolverConfig};

use crate::{build_config, DemoArgs};

/// Grid density for the sampled utility clouds.
const CLOUD_RES: usize = 120;

pub fn cmd_demo(args: DemoArgs) -> Result<ExitCode> {
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    match args.id.as_str() {
        "fig1" => demo_fig1(&args),
        "fig3-regions" => demo_fig3_regions(&args),
        "fig5" => demo_fig5(&args),
        other => bail!("unknown demo {other:?} (expected fig1, fig3-regions, or fig5)"),
    }?;
    Ok(ExitCode::SUCCESS)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_clouds(dir: &Path, prefix: &str, economy: &Economy) -> Result<()> {
    let ups = sample_ups(economy, CLOUD_RES).map_err(|e| anyhow::anyhow!("{e}"))?;
    write_file(dir, &format!("{prefix}-ups.csv"), &ups.to_csv())?;
    let vps = sample_vps(economy, CLOUD_RES, true).map_err(|e| anyhow::anyhow!("{e}"))?;
    write_file(dir, &format!("{prefix}-vps.csv"), &vps.to_csv())?;
    Ok(())
}

/// Two identical non-concavifiable consumers with equal incomes: the utility
/// clouds, the equilibrium, and the line of efficient interior allocations.
fn demo_fig1(args: &DemoArgs) -> Result<()> {
    let config = build_config(&args.config, args.seed)?;
    let economy = fenchel_pair();
    write_clouds(&args.out_dir, "fig1", &economy)?;

    let [p1, p2] = fenchel_pair_price();
    // Efficient interior allocations lie on one straight line in the box.
    let sq3 = 3f64.sqrt();
    let intercept = 1.0 + sq3 / 2.0;
    let slope = -(1.0 + sq3);
    let x11_lo = (3.0 - sq3) / 4.0;
    let x11_hi = (1.0 + sq3) / 4.0;

    let solved = solve_walrasian_income(&economy, &config).map_err(|e| anyhow::anyhow!("{e}"))?;

    let mut csv = String::from("quantity,closed_form,computed\n");
    let _ = writeln!(csv, "p_x,{p1},{}", solved.p.0[0]);
    let _ = writeln!(csv, "p_y,{p2},{}", solved.p.0[1]);
    let _ = writeln!(csv, "x_1_x,{x11_lo},{}", solved.x.0[0][0]);
    let _ = writeln!(csv, "x_1_y,1,{}", solved.x.0[0][1]);
    let _ = writeln!(csv, "potential,0,{}", solved.potential);
    let _ = writeln!(csv, "pareto_line_intercept,{intercept},");
    let _ = writeln!(csv, "pareto_line_slope,{slope},");
    let _ = writeln!(csv, "pareto_line_x11_min,{x11_lo},");
    let _ = writeln!(csv, "pareto_line_x11_max,{x11_hi},");
    write_file(&args.out_dir, "fig1-equilibrium.csv", &csv)?;

    println!("equilibrium price: computed ({:.7}, {:.7}), closed form ({p1:.7}, {p2:.7})", solved.p.0[0], solved.p.0[1]);
    println!(
        "efficient interior allocations: x_1_y = {intercept:.7} {slope:.7}*x_1_x \
         for x_1_x in [{x11_lo:.7}, {x11_hi:.7}]"
    );
    Ok(())
}

/// The smooth/kinked pair: classify a grid of endowments into the four
/// closed-form price regimes and compare the solver against each.
fn demo_fig3_regions(args: &DemoArgs) -> Result<()> {
    // The demo runs 81 full solves; trim the search budget to keep it quick.
    // Explicit --config still overrides these.
    let mut base = vec![
        "grid-resolution=48".to_string(),
        "multistart-count=2".to_string(),
        "refine-iterations=32".to_string(),
    ];
    base.extend(args.config.iter().cloned());
    let config = build_config(&base, args.seed)?;

    write_clouds(&args.out_dir, "fig3", &mixed_pair([0.5, 0.5]))?;

    let mut csv = String::from(
        "omega_1_x,omega_1_y,region,p_x_closed,x_1_x_closed,p_x_computed,x_1_x_computed,potential,kind\n",
    );
    let mut worst: f64 = 0.0;
    for i in 1..=9 {
        for j in 1..=9 {
            let omega1 = [i as f64 / 10.0, j as f64 / 10.0];
            let reference = mixed_pair_reference(omega1);
            let economy = mixed_pair(omega1);
            let solved =
                solve_yquilibrium(&economy, &config).map_err(|e| anyhow::anyhow!("{e}"))?;
            worst = worst.max((solved.p.0[0] - reference.p1).abs());
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{}",
                omega1[0],
                omega1[1],
                reference.regime,
                reference.p1,
                reference.x1[0],
                solved.p.0[0],
                solved.x.0[0][0],
                solved.potential,
                match solved.kind {
                    edgeworth::solver::SolutionKind::Walrasian => "walrasian",
                    edgeworth::solver::SolutionKind::Yquilibrium => "yquilibrium",
                },
            );
        }
    }
    write_file(&args.out_dir, "fig3-regions.csv", &csv)?;

    for omega1 in [[0.5, 0.5], [0.9, 0.3]] {
        let reference = mixed_pair_reference(omega1);
        println!(
            "endowment ({}, {}): regime {}, closed-form p_x = {:.6}, x_1_x = {:.6}",
            omega1[0], omega1[1], reference.regime, reference.p1, reference.x1[0]
        );
    }
    println!("largest |closed form - computed| price gap over the 9x9 grid: {worst:.2e}");
    Ok(())
}

/// The smooth non-concave pair: utility clouds plus the welfare-weight
/// iteration against its closed-form price across endowments.
fn demo_fig5(args: &DemoArgs) -> Result<()> {
    let config = build_config(&args.config, args.seed)?;
    write_clouds(&args.out_dir, "fig5", &cobb_douglas_pair([0.5, 0.5]))?;

    let omegas: [[f64; 2]; 10] = [
        [0.1, 0.1],
        [0.2, 0.6],
        [0.25, 0.75],
        [0.3, 0.3],
        [0.4, 0.8],
        [0.5, 0.5],
        [0.6, 0.2],
        [0.7, 0.7],
        [0.8, 0.4],
        [0.9, 0.9],
    ];
    let mut csv = String::from(
        "omega_1_x,omega_1_y,p_x_closed,p_x_computed,iterations,value,clearing_residual\n",
    );
    let mut worst: f64 = 0.0;
    for omega1 in omegas {
        let economy = cobb_douglas_pair(omega1);
        let closed = cobb_douglas_pair_price(omega1);
        let outcome = run_negishi(&economy, &config)?;
        worst = worst.max((outcome.p.0[0] - closed).abs());
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            omega1[0],
            omega1[1],
            closed,
            outcome.p.0[0],
            outcome.iterations,
            outcome.value,
            outcome.clearing_residual,
        );
    }
    write_file(&args.out_dir, "fig5-negishi.csv", &csv)?;

    let spot = [0.5, 0.5];
    println!(
        "endowment ({}, {}): closed-form p_x = {:.6}",
        spot[0],
        spot[1],
        cobb_douglas_pair_price(spot)
    );
    println!("largest |closed form - computed| price gap over the 10 endowments: {worst:.2e}");
    Ok(())
}

fn run_negishi(
    economy: &Economy,
    config: &SolverConfig,
) -> Result<edgeworth::solver::NegishiOutcome> {
    match dual_negishi_minimize(economy, config) {
        Ok(outcome) => Ok(outcome),
        Err(edgeworth::solver::SolveError::NoConverge { outcome, .. }) => Ok(*outcome),
        Err(e) => bail!("{e}"),
    }
}
