use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ghcp::analysis::{asymptotic_gain, hidden_expected, mean_interference, success_prob_asappp, KernelContext};
use ghcp::cli::config::{config_hash, cross_link_preset_with, directional_preset, parse_config_file, ConfigFile, DEFAULT_CARRIER_HZ, REFERENCE_POWER_W};
use ghcp::cli::experiment::{run_labeled, write_rows, write_rows_to, ExperimentPlan};
use ghcp::pointprocess::{sample_bipolar, thin, NetworkConfig, Window};
use ghcp::protocol::{check_liveness, check_recovery, check_safety, run_handshake, Scenario};
use ghcp::Result;

#[derive(Parser)]
#[command(name = "ghcp", version, about = "RTS/CTS hard-core process simulator and analytical model")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration; defaults apply to omitted fields.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Directory for CSV outputs; stdout if omitted.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample and thin one realization.
    Simulate {
        /// Side of the square observation window, m.
        #[arg(long, default_value_t = 2000.0)]
        window: f64,
    },
    /// Evaluate the analytical model at the configured point.
    Analyze,
    /// Run the `[experiment]` sweep of the configuration.
    Sweep,
    /// Run a handshake scenario and check the log predicates.
    Protocol {
        scenario: PathBuf,
    },
    /// The sweep for cross-link and directional handshakes side by side.
    Compare,
}

fn load(common: &Common) -> Result<ConfigFile> {
    match &common.config {
        Some(p) => parse_config_file(&std::fs::read_to_string(p)?),
        None => Ok(ConfigFile::default()),
    }
}

fn plan_for(file: &ConfigFile, config: NetworkConfig, seed: Option<u64>) -> Result<ExperimentPlan> {
    let mut plan = ExperimentPlan::from_section(config, &file.experiment.clone().unwrap_or_default())?;
    if let Some(s) = seed {
        plan.seed = s;
    }
    Ok(plan)
}

fn emit_rows(rows: &[ghcp::cli::experiment::Row], out: Option<&Path>, name: &str) -> Result<()> {
    match out {
        Some(dir) => {
            let path = dir.join(format!("{name}.csv"));
            write_rows_to(rows, &path)?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        None => write_rows(rows, std::io::stdout().lock()),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.common.workers {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
    }
    let seed = cli.common.seed;
    let out = cli.common.out.as_deref();
    match cli.command {
        Command::Simulate { window } => {
            let file = load(&cli.common)?;
            let cfg = file.network.build()?;
            let real = thin(&sample_bipolar(&cfg, Window::centered(window, window), seed.unwrap_or(1))?, &cfg);
            eprintln!(
                "config {} seed {}: {} parents, retained intensity {:.6e} (analytic {:.6e})",
                config_hash(&cfg),
                real.seed,
                real.pairs.len(),
                real.retained_intensity(),
                ghcp::pointprocess::intensity(cfg.thinning, cfg.lambda_p, cfg.v_o()),
            );
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(dir)?;
                    real.write_csv(std::fs::File::create(dir.join("realization.csv"))?)?;
                }
                None => real.write_csv(std::io::stdout().lock())?,
            }
        }
        Command::Analyze => {
            let cfg = load(&cli.common)?.network.build()?;
            let ctx = KernelContext::new(&cfg)?;
            let lb = ctx.lambda_b();
            println!("config_hash,{}", config_hash(&cfg));
            println!("v_o,{}", ctx.v_o);
            println!("lambda_b,{lb}");
            println!("mean_interference,{}", mean_interference(&ctx, cfg.los_radius)?);
            println!("gain,{}", asymptotic_gain(&ctx)?);
            let p = success_prob_asappp(cfg.sir_threshold, &ctx)?;
            println!("success,{p}");
            println!("throughput,{}", p * lb);
            println!("hidden,{}", hidden_expected(&ctx)?);
        }
        Command::Sweep => {
            let file = load(&cli.common)?;
            let plan = plan_for(&file, file.network.build()?, seed)?;
            let rows = run_labeled(&plan, "")?;
            let target = out.map(Path::to_path_buf).or_else(|| plan.output.as_ref().and_then(|p| p.parent().map(Path::to_path_buf)));
            emit_rows(&rows, target.as_deref(), &plan.id)?;
        }
        Command::Compare => {
            let file = load(&cli.common)?;
            let net = &file.network;
            let carrier = net.carrier_hz.unwrap_or(DEFAULT_CARRIER_HZ);
            let (n_t, n_r, d) = (net.n_t.unwrap_or(16), net.n_r.unwrap_or(8), net.link_distance.unwrap_or(20.0));
            let base = net.build()?;
            let mut rows = Vec::new();
            for (label, preset) in [
                ("cross_link", cross_link_preset_with(net.p_sub7.unwrap_or(REFERENCE_POWER_W), carrier, n_t, n_r, d)),
                ("directional", directional_preset(carrier, n_t, n_r, d)),
            ] {
                let cfg = NetworkConfig {
                    exclusion: preset.exclusion,
                    data_antenna: preset.data_antenna,
                    ..base.clone()
                };
                let plan = plan_for(&file, cfg, seed)?;
                rows.extend(run_labeled(&plan, label)?);
            }
            emit_rows(&rows, out, "compare")?;
        }
        Command::Protocol { scenario } => {
            let sc = Scenario::load(&scenario)?;
            let log = run_handshake(&sc, seed.unwrap_or(1))?;
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(dir)?;
                    log.write_csv(std::fs::File::create(dir.join("events.csv"))?)?;
                }
                None => log.write_csv(std::io::stdout().lock())?,
            }
            let mut ok = true;
            for (name, res) in [("safety", check_safety(&log, &sc)), ("liveness", check_liveness(&log, &sc)), ("recovery", check_recovery(&log, &sc))] {
                match res {
                    Ok(()) => eprintln!("{name}: ok"),
                    Err(e) => {
                        ok = false;
                        eprintln!("{name}: violated: {e}");
                    }
                }
            }
            if !ok {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
