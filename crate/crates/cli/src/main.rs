//! Experiment driver for the adaptive-partition Q-learning benchmarks.
//!
//! Subcommands:
//! - `run`: one algorithm on one instance at a fixed scaling value
//! - `sweep`: the 13-value scaling sweep for one algorithm
//! - `compare`: both trainers (each at their best swept scaling value)
//!   against the random baseline, with a Welch t-test
//! - `long-horizon`: the H = 50 oil scenario
//! - `export-partition`: train one agent and dump its partition as CSV
//!
//! Options resolve in three layers: built-in defaults (episode and agent
//! counts follow the benchmark protocol per environment), then a flat
//! `key = value` config file, then command-line flags.

mod settings;

use std::fs;
use std::io::Write;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use spaql_core::harness::{
    self, Algorithm, Comparison, ExperimentResult, ExperimentSpec, SweepResult,
};
use spaql_core::spaql;

use settings::Settings;

#[derive(Parser)]
#[command(name = "spaql", version, about = "Adaptive-partition Q-learning benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one algorithm on one instance and report aggregates.
    Run(CommonArgs),
    /// Run the scaling-value sweep for one algorithm.
    Sweep(CommonArgs),
    /// Compare spaql and aql (best swept scaling each) plus the random baseline.
    Compare(CommonArgs),
    /// Oil with Laplace survey (λ=1) at H=50: a few agents of each trainer.
    LongHorizon(CommonArgs),
    /// Train a single agent and export its partition geometry as CSV.
    ExportPartition(CommonArgs),
}

/// Flags shared by every subcommand; unset values fall back to the config
/// file and then to the protocol defaults.
#[derive(Args, Debug, Default, Clone)]
pub struct CommonArgs {
    /// Flat key=value config file (same keys as the long flags).
    #[arg(long)]
    config: Option<std::path::PathBuf>,
    /// Environment: oil | ambulance.
    #[arg(long)]
    env: Option<String>,
    /// Oil survey function: laplace | quadratic.
    #[arg(long)]
    survey: Option<String>,
    /// Oil survey sharpness λ.
    #[arg(long)]
    lambda: Option<f64>,
    /// Ambulance arrival distribution: uniform | beta.
    #[arg(long)]
    arrivals: Option<String>,
    /// Ambulance relocation cost weight c in [0, 1].
    #[arg(long = "cost-weight")]
    cost_weight: Option<f64>,
    /// Steps per episode H.
    #[arg(long)]
    horizon: Option<u32>,
    /// Confidence-bonus scaling ξ.
    #[arg(long)]
    xi: Option<f64>,
    /// Training iterations K (default: 5000 oil, 2000 ambulance).
    #[arg(long)]
    episodes: Option<u32>,
    /// Evaluation rollouts N per iteration.
    #[arg(long)]
    rollouts: Option<u32>,
    /// Number of agents (default: 25 oil, 50 ambulance; 2 for long-horizon).
    #[arg(long)]
    agents: Option<u32>,
    /// Base seed; agent i trains with seed base+i.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for curves.csv, summary.json, and partition CSVs.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
    /// Algorithm for run/sweep: spaql | aql | random.
    #[arg(long)]
    algorithm: Option<String>,
    /// Comma-separated scaling values for sweep/compare.
    #[arg(long = "xi-values", value_delimiter = ',')]
    xi_values: Option<Vec<f64>>,
    /// Splits tolerated without improvement before the agent resets.
    #[arg(long = "reset-splits")]
    reset_splits: Option<u32>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run(&Settings::resolve(&args)?),
        Command::Sweep(args) => sweep(&Settings::resolve(&args)?),
        Command::Compare(args) => compare(&Settings::resolve(&args)?),
        Command::LongHorizon(args) => long_horizon(&Settings::resolve_long_horizon(&args)?),
        Command::ExportPartition(args) => export_partition(&Settings::resolve(&args)?),
    }
}

fn fmt_pm(mean: f64, half_width: f64) -> String {
    format!("{mean:.3} ± {half_width:.3}")
}

fn describe(s: &Settings) -> String {
    format!(
        "{} (H={}, K={}, N={}, agents={}, seed={})",
        s.env.label(),
        s.train.horizon,
        s.train.episodes,
        s.train.eval_rollouts,
        s.n_agents,
        s.base_seed
    )
}

fn print_result_line(name: &str, r: &ExperimentResult, xi: Option<f64>) {
    let arms = if r.algorithm() == Algorithm::Random {
        "—".to_string()
    } else {
        fmt_pm(r.arms.mean, r.arms.ci95_half_width)
    };
    let xi = xi.map_or("—".to_string(), |x| format!("{x}"));
    println!(
        "  {name:<8} reward {:<18} arms {:<18} ξ {xi}",
        fmt_pm(r.reward.mean, r.reward.ci95_half_width),
        arms
    );
}

fn run(s: &Settings) -> Result<()> {
    let spec = s.experiment_spec();
    eprintln!("running {} × {} agents on {}", s.algorithm, s.n_agents, describe(s));
    let result = harness::run_experiment(&spec)?;
    println!("instance: {}", describe(s));
    print_result_line(&s.algorithm.to_string(), &result, Some(s.train.scaling));
    if let Some(dir) = &s.out {
        println!("results written to {}", dir.display());
    }
    Ok(())
}

fn sweep(s: &Settings) -> Result<()> {
    let mut spec = s.experiment_spec();
    spec.output_dir = None;
    eprintln!(
        "sweeping {} scaling values for {} on {}",
        s.xi_values.len(),
        s.algorithm,
        describe(s)
    );
    let sweep = run_sweep_with_progress(&spec, &s.xi_values)?;
    println!("instance: {}", describe(s));
    println!("  {:<8} {:<20} {}", "ξ", "final reward", "final arms");
    for (i, r) in sweep.runs.iter().enumerate() {
        let marker = if i == sweep.best_index { "  ← best" } else { "" };
        println!(
            "  {:<8} {:<20} {}{marker}",
            sweep.xi_values[i],
            fmt_pm(r.reward.mean, r.reward.ci95_half_width),
            fmt_pm(r.arms.mean, r.arms.ci95_half_width),
        );
    }
    println!(
        "  across-ξ reward mean {:.3}, std {:.3}",
        sweep.reward_mean_across_xi, sweep.reward_std_across_xi
    );
    if let Some(dir) = &s.out {
        export_sweep(s, &sweep, dir)?;
        println!("results written to {}", dir.display());
    }
    Ok(())
}

/// Runs the sweep one scaling value at a time so progress can be reported;
/// per-value outputs go to `xi_<value>` subdirectories when persisting.
fn run_sweep_with_progress(spec: &ExperimentSpec, xi_values: &[f64]) -> Result<SweepResult> {
    let total = xi_values.len();
    let mut done = 0usize;
    let started = std::time::Instant::now();
    let result = {
        // scaling_sweep runs serially over values; wrap it for progress.
        let mut runs = Vec::with_capacity(total);
        for &xi in xi_values {
            let mut sub = spec.clone();
            sub.train.scaling = xi;
            sub.output_dir = spec.output_dir.as_ref().map(|d| d.join(format!("xi_{xi}")));
            runs.push(harness::run_experiment(&sub)?);
            done += 1;
            eprintln!(
                "  ξ={xi} done ({done}/{total}, {:.1}s elapsed)",
                started.elapsed().as_secs_f64()
            );
        }
        let means: Vec<f64> = runs.iter().map(|r| r.reward.mean).collect();
        let best_index = means
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite rewards"))
            .map(|(i, _)| i)
            .unwrap_or(0);
        SweepResult {
            xi_values: xi_values.to_vec(),
            best_index,
            reward_mean_across_xi: spaql_core::harness::stats::mean(&means),
            reward_std_across_xi: spaql_core::harness::stats::sample_std(&means),
            runs,
        }
    };
    Ok(result)
}

fn export_sweep(s: &Settings, sweep: &SweepResult, dir: &std::path::Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let entries = sweep.runs.iter().map(harness::SummaryEntry::from_result).collect();
    let mut best_xi = std::collections::BTreeMap::new();
    best_xi.insert(s.algorithm.to_string(), sweep.best_xi());
    let summary = harness::Summary {
        instance: s.env.label(),
        entries,
        welch_tests: Vec::new(),
        best_xi,
    };
    harness::write_json(&dir.join("summary.json"), &summary)?;
    // Persist the per-value runs under xi_<value> directories.
    for (i, run) in sweep.runs.iter().enumerate() {
        let sub = dir.join(format!("xi_{}", sweep.xi_values[i]));
        let entry_summary = harness::Summary {
            instance: s.env.label(),
            entries: vec![harness::SummaryEntry::from_result(run)],
            welch_tests: Vec::new(),
            best_xi: Default::default(),
        };
        harness::export_results(&sub, &[run], &entry_summary)?;
    }
    Ok(())
}

fn compare(s: &Settings) -> Result<()> {
    eprintln!(
        "comparing spaql vs aql vs random on {} ({} scaling values per sweep)",
        describe(s),
        s.xi_values.len()
    );
    let cmp: Comparison = harness::compare_instance(
        s.env,
        s.train,
        s.n_agents,
        s.base_seed,
        &s.xi_values,
        s.out.as_deref(),
        true,
    )?;
    println!("instance: {}", describe(s));
    print_result_line("random", &cmp.random, None);
    print_result_line("aql", cmp.aql.best(), Some(cmp.aql.best_xi()));
    print_result_line("spaql", cmp.spaql.best(), Some(cmp.spaql.best_xi()));
    println!(
        "  across-ξ reward std: spaql {:.4}, aql {:.4}",
        cmp.spaql.reward_std_across_xi, cmp.aql.reward_std_across_xi
    );
    match &cmp.welch_best {
        Some(w) => println!(
            "  Welch t-test (spaql vs aql): t={:.4}, df={:.1}, p={:.4} → {} at α=0.05",
            w.t,
            w.df,
            w.p,
            if w.significant { "significant" } else { "not significant" }
        ),
        None => println!("  Welch t-test (spaql vs aql): not available (degenerate samples)"),
    }
    if let Some(dir) = &s.out {
        println!("results written to {}", dir.display());
    }
    Ok(())
}

fn long_horizon(s: &Settings) -> Result<()> {
    eprintln!("long-horizon scenario on {}", describe(s));
    let report = harness::long_horizon_scenario(
        s.train.scaling,
        s.train.episodes,
        s.n_agents,
        s.base_seed,
        s.out.as_deref(),
    )?;
    println!("instance: {} (H=50)", s.env.label());
    println!("  maximum attainable cumulative reward ≈ {:.4}", report.max_reward);
    print_result_line("spaql", &report.spaql, Some(s.train.scaling));
    print_result_line("aql", &report.aql, Some(s.train.scaling));
    for (i, frac) in report.spaql_fraction_at_2000.iter().enumerate() {
        println!("  spaql agent {i}: {:.1}% of final reward reached by iteration 2000", frac * 100.0);
    }
    println!("  final arms ratio (aql / spaql): {:.2}×", report.arms_ratio);
    if let Some(dir) = &s.out {
        println!("results written to {}", dir.display());
    }
    Ok(())
}

fn export_partition(s: &Settings) -> Result<()> {
    let env = s.env.build()?;
    eprintln!("training one spaql agent on {}", describe(s));
    let run = match &env {
        spaql_core::env::BuiltEnv::Oil(e) => spaql::train(e, &s.train),
        spaql_core::env::BuiltEnv::Ambulance(e) => spaql::train(e, &s.train),
    };
    let dir = s.out.clone().unwrap_or_else(|| std::path::PathBuf::from("."));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(format!("partition_seed{}.csv", s.train.seed));
    let mut file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    run.best.write_geometry_csv(&mut file)?;
    file.flush()?;
    println!(
        "best partition ({} arms, performance {:.4}) written to {}",
        run.best.num_arms(),
        run.best_performance,
        path.display()
    );
    Ok(())
}
