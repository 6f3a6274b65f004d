use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use commcp::bench::suite::calibration_scenarios;
use commcp::bench::{generate, generate_calibration, run_episode, run_suite, write_suite};
use commcp::bench::{EpisodeConfig, Policy, SuiteConfig, SuiteKind};
use commcp::conformal::{read_thresholds, write_artifacts, CalibrationArtifact, CpConfig};
use commcp::scenario::{load_scenario_file, serialize_scenario, Scenario};

#[derive(Parser)]
#[command(name = "commcp", version, about = "Multi-agent embodied question answering simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one episode and write its result and log.
    Run(RunArgs),
    /// Build calibration artifacts from a directory of scenario files.
    Calibrate {
        #[arg(long)]
        scenarios: PathBuf,
        #[arg(long, default_value_t = 2000)]
        pairs: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.15)]
        sigma: f64,
        /// Miscoverage for both classes; defaults to the per-class values.
        #[arg(long)]
        eps1: Option<f64>,
    },
    /// Run an experiment suite and write CSVs and logs.
    Bench {
        #[arg(long)]
        suite: SuiteKind,
        #[arg(long, default_value_t = 30)]
        seeds: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        base_seed: u64,
        /// Overrides the suite's oracle noise.
        #[arg(long)]
        sigma: Option<f64>,
        /// Episode configuration as JSON; suite defaults when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Skip writing per-episode logs.
        #[arg(long)]
        no_logs: bool,
    },
    /// Print a suite's default episode configuration as JSON.
    Config {
        #[arg(long)]
        suite: SuiteKind,
    },
    /// Synthesize a scenario file.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        size_class: u8,
        #[arg(long, default_value_t = 2)]
        agents: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value = "commcp")]
    policy: Policy,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Miscoverage for both classes; defaults to the per-class values.
    #[arg(long)]
    eps1: Option<f64>,
    #[arg(long)]
    eps2: Option<f64>,
    #[arg(long)]
    tau1: Option<f64>,
    #[arg(long)]
    tau2: Option<f64>,
    #[arg(long)]
    msg_rate: Option<f64>,
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Field of view in degrees.
    #[arg(long)]
    fov: Option<f64>,
    /// Sensor range in cells.
    #[arg(long)]
    range: Option<u32>,
    /// Calibration artifact file; calibrates on generated scenarios when absent.
    #[arg(long)]
    calibration: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Also log every agent's smoothed value map each tick.
    #[arg(long)]
    sv_dump: bool,
    #[arg(long)]
    out: PathBuf,
}

fn cp_config(eps1: Option<f64>) -> CpConfig {
    match eps1 {
        Some(e) => CpConfig {
            epsilon1_a: e,
            epsilon1_b: e,
            ..CpConfig::default()
        },
        None => CpConfig::default(),
    }
}

fn run(a: RunArgs) -> Result<()> {
    let scenario = load_scenario_file(&a.scenario)?;
    let mut cfg = EpisodeConfig {
        cp: cp_config(a.eps1),
        tmax: a.tmax,
        threads: a.threads,
        record_log: true,
        record_sv: a.sv_dump,
        ..EpisodeConfig::default()
    };
    if let Some(v) = a.eps2 {
        cfg.confidence.epsilon2 = v;
    }
    if let Some(v) = a.tau1 {
        cfg.explore.tau1 = v;
    }
    if let Some(v) = a.tau2 {
        cfg.explore.tau2 = v;
    }
    if let Some(v) = a.msg_rate {
        cfg.bus.msg_rate = v;
    }
    if let Some(v) = a.sigma {
        cfg.oracle.noise = v;
    }
    if let Some(v) = a.fov {
        cfg.sensor.fov_deg = v;
    }
    if let Some(v) = a.range {
        cfg.sensor.range = v;
    }
    cfg.oracle.validate()?;
    cfg.cp.validate()?;
    let thresholds = match &a.calibration {
        Some(path) => read_thresholds(path)?,
        None => {
            let (ca, cb) = generate_calibration(&calibration_scenarios()?, &cfg.oracle, 0, 2000)?;
            cfg.cp.thresholds(&ca, &cb)?
        }
    };
    let result = run_episode(&scenario, a.policy, a.seed, &cfg, thresholds)?;
    fs::create_dir_all(&a.out)?;
    fs::write(a.out.join("result.json"), serde_json::to_string_pretty(&result)?)?;
    if let Some(log) = &result.log {
        fs::write(a.out.join("episode.jsonl"), log)?;
    }
    println!(
        "{} {} seed {}: sr {:.3} ntc {:.3} messages {}",
        result.scenario, result.policy, result.seed, result.sr, result.ntc, result.messages_sent
    );
    Ok(())
}

fn load_dir(dir: &Path) -> Result<Vec<Scenario>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no scenario files in {}", dir.display());
    }
    paths
        .iter()
        .map(|p| load_scenario_file(p).with_context(|| format!("loading {}", p.display())))
        .collect()
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Run(a) => run(a),
        Cmd::Calibrate {
            scenarios,
            pairs,
            out,
            seed,
            sigma,
            eps1,
        } => {
            let scenarios = load_dir(&scenarios)?;
            let cp = cp_config(eps1);
            let mut oracle = commcp::oracle::OracleConfig::default();
            oracle.noise = sigma;
            oracle.validate()?;
            let (ca, cb) = generate_calibration(&scenarios, &oracle, seed, pairs)?;
            let arts = [
                CalibrationArtifact::build(&ca, cp.epsilon1_a, cp.direction)?,
                CalibrationArtifact::build(&cb, cp.epsilon1_b, cp.direction)?,
            ];
            write_artifacts(&out, &arts)?;
            for art in &arts {
                println!(
                    "option {}: n {} threshold {:.4}",
                    art.option_class.letter(),
                    art.scores.len(),
                    art.threshold
                );
            }
            Ok(())
        }
        Cmd::Bench {
            suite,
            seeds,
            out,
            base_seed,
            sigma,
            config,
            no_logs,
        } => {
            let mut cfg = SuiteConfig::new(suite, seeds);
            if let Some(path) = config {
                let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                cfg.episode = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            }
            cfg.base_seed = base_seed;
            cfg.record_logs = !no_logs;
            if let Some(s) = sigma {
                cfg.episode.oracle.noise = s;
            }
            let res = run_suite(&cfg)?;
            write_suite(&res, &out)?;
            for c in &res.curves {
                let sr = |x| c.sr_at(x).unwrap_or(f64::NAN);
                println!("{:<20} sr@0.3 {:.3} sr@0.6 {:.3} sr@1.0 {:.3}", c.policy, sr(0.3), sr(0.6), sr(1.0));
            }
            Ok(())
        }
        Cmd::Config { suite } => {
            println!("{}", serde_json::to_string_pretty(&SuiteConfig::new(suite, 0).episode)?);
            Ok(())
        }
        Cmd::Gen {
            seed,
            size_class,
            agents,
            out,
        } => {
            let s = generate(seed, size_class, agents)?;
            fs::write(&out, serialize_scenario(&s))?;
            println!("{}: {} agents, {} questions", s.name(), s.n_agents(), s.questions.len());
            Ok(())
        }
    }
}
