use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use mec_cli::plan::{run_experiment, ExperimentPlan};
use mec_cli::{resolve_config, verify, SummaryRow};
use mec_core::Policy;

#[derive(Parser)]
#[command(name = "mec", version, about = "Edge-server energy/backlog simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one policy.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "optimal")]
        policy: Policy,
        #[arg(long, default_value = "results/run")]
        out: PathBuf,
    },
    /// Run a sweep described by a TOML plan file.
    Sweep {
        plan: PathBuf,
        /// Write per-run traces regardless of the plan setting.
        #[arg(long)]
        trace: bool,
    },
    /// Run both policies on the same random numbers and compare.
    BaselineCompare {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "results/compare")]
        out: PathBuf,
    },
    /// Check the solver against the brute-force oracles and the drift bound.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Smaller scans and no sweeps.
        #[arg(long)]
        quick: bool,
    },
}

#[derive(Args)]
struct Common {
    /// TOML configuration; defaults to the reference network.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of slots to simulate.
    #[arg(long)]
    slots: Option<usize>,
    /// Energy/backlog trade-off weight.
    #[arg(long = "V")]
    v: Option<f64>,
    /// Also write per-slot trace CSVs.
    #[arg(long)]
    trace: bool,
}

impl Common {
    fn plan(&self, policies: Vec<Policy>, out: &Path) -> Result<ExperimentPlan> {
        let cfg = resolve_config(self.config.as_deref(), self.seed, self.slots, self.v)?;
        let seed = cfg.seed;
        let mut plan = ExperimentPlan::single(cfg, policies, vec![seed], out.to_path_buf());
        plan.trace = self.trace;
        Ok(plan)
    }
}

fn warn(plan: &ExperimentPlan) -> Result<()> {
    for w in plan.base.to_system()?.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn print_rows(rows: &[SummaryRow]) {
    println!(
        "{:>8} {:>12} {:>8} {:>6} {:>12} {:>12} {:>12} {:>6}",
        "axis", "value", "policy", "seed", "avg_power", "avg_queue", "tail_queue", "noconv"
    );
    for r in rows {
        println!(
            "{:>8} {:>12.4e} {:>8} {:>6} {:>12.5} {:>12.5e} {:>12.5e} {:>6}",
            r.axis,
            r.value,
            r.policy.to_string(),
            r.seed,
            r.avg_power,
            r.avg_queue,
            r.tail_avg_queue,
            r.nonconverged_slots
        );
    }
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { common, policy, out } => {
            let plan = common.plan(vec![policy], &out)?;
            warn(&plan)?;
            print_rows(&run_experiment(&plan)?);
            eprintln!("wrote {}", out.display());
        }
        Command::BaselineCompare { common, out } => {
            let plan = common.plan(Policy::ALL.to_vec(), &out)?;
            warn(&plan)?;
            let rows = run_experiment(&plan)?;
            print_rows(&rows);
            if let [opt, even] = rows.as_slice() {
                println!(
                    "even/optimal: power {:.4}, avg queue {:.4}, tail queue {:.4}",
                    even.avg_power / opt.avg_power,
                    even.avg_queue / opt.avg_queue,
                    even.tail_avg_queue / opt.tail_avg_queue
                );
            }
            eprintln!("wrote {}", out.display());
        }
        Command::Sweep { plan, trace } => {
            let mut plan = ExperimentPlan::load(&plan)?;
            plan.trace |= trace;
            warn(&plan)?;
            print_rows(&run_experiment(&plan)?);
            eprintln!("wrote {}", plan.out_dir.display());
        }
        Command::Verify { config, quick } => {
            let cfg = resolve_config(config.as_deref(), None, None, None)?.to_system()?;
            let reports = verify::run_suite(&cfg, quick, |r| println!("{r}"))?;
            let failed = reports.iter().filter(|r| !r.passed).count();
            println!("{} checks, {failed} failed", reports.len());
            return Ok(failed == 0);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
