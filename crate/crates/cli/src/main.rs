//! `compass`: map generation, corpus generation, reward analysis, training
//! and evaluation as separately re-runnable stages.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use compass_core::datagen::{read_corpus, write_records, GenConfig};
use compass_core::eval::{summary_csv, EvalConfig, EvalSuite, Policy};
use compass_core::learner::{
    log_csv, read_checkpoint, states_from_corpus, train_grpo, train_sft, write_checkpoint, FeatureConfig,
    GrpoConfig, LogRow, PolicyParams, SftConfig, FEATURE_DIM,
};
use compass_core::nav::NavConfig;
use compass_core::pipeline::{self, DataConfig, MapSpec, PipelineConfig, EVAL_SEED_OFFSET};
use compass_core::reward::{self, gap_csv, scenario_table, sweep_gap, RewardFamily, RewardParams};
use compass_core::world::{load_map, MapStyle, OccupancyGrid};

#[derive(Parser)]
#[command(name = "compass", version, about = "Candidate-choice navigation lab", subcommand_required = true)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Directory every artifact is written under.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// `key = value` file mirroring the flags; explicit flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SeedArg {
    #[arg(long, env = "COMPASS_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Clone)]
struct NavArgs {
    /// Sensor field of view in degrees.
    #[arg(long, default_value_t = 120.0)]
    fov_deg: f64,
    /// Extra metres charged to turning around in place.
    #[arg(long, default_value_t = 1.0)]
    turn_around_penalty: f64,
    #[arg(long, default_value_t = 1.0)]
    success_radius: f64,
    #[arg(long, default_value_t = 500)]
    max_primitives: usize,
}

impl NavArgs {
    fn config(&self) -> Result<NavConfig> {
        let mut nav = NavConfig::default();
        nav.sensor.fov = self.fov_deg.to_radians();
        nav.turn_around_penalty = self.turn_around_penalty;
        nav.success_radius = self.success_radius;
        nav.max_primitives = self.max_primitives;
        nav.validate().map_err(anyhow::Error::msg)?;
        Ok(nav)
    }
}

#[derive(Args, Clone)]
struct FeatureArgs {
    /// Std-dev of the goal-bearing noise in degrees (`inf` hides the goal).
    #[arg(long, default_value_t = 30.0)]
    bearing_noise_deg: f64,
}

impl FeatureArgs {
    fn config(&self) -> Result<FeatureConfig> {
        if !(self.bearing_noise_deg >= 0.0) {
            bail!("--bearing-noise-deg must be non-negative, got {}", self.bearing_noise_deg);
        }
        Ok(FeatureConfig { bearing_noise: self.bearing_noise_deg.to_radians(), ..FeatureConfig::default() })
    }
}

#[derive(Args, Clone)]
struct MapArgs {
    #[arg(long, default_value_t = 15)]
    size: usize,
    /// Obstacle share (blocks, rooms) or share of maze walls kept.
    #[arg(long, default_value_t = 0.5)]
    obstacle_rate: f64,
    #[arg(long, default_value = "maze")]
    style: MapStyle,
}

impl MapArgs {
    fn spec(&self, count: usize) -> Result<MapSpec> {
        if self.size < 5 {
            bail!("--size must be at least 5, got {}", self.size);
        }
        if !(0.0..=0.9).contains(&self.obstacle_rate) {
            bail!("--obstacle-rate must lie in [0, 0.9], got {}", self.obstacle_rate);
        }
        Ok(MapSpec { count, size: self.size, obstacle_rate: self.obstacle_rate, style: self.style })
    }
}

#[derive(Args, Clone)]
struct DataArgs {
    #[arg(long, default_value_t = 4)]
    starts_per_map: usize,
    /// Minimum geodesic start-to-goal distance in metres.
    #[arg(long, default_value_t = 3.0)]
    min_start_dist: f64,
    /// Alternative rollouts branched off each main rollout.
    #[arg(long, default_value_t = 3)]
    max_backtracks: usize,
    #[arg(long, default_value_t = 0.1)]
    certainty_threshold: f64,
}

impl DataArgs {
    fn config(&self, nav: NavConfig, seed: u64) -> DataConfig {
        let gen = GenConfig {
            nav,
            max_backtracks: self.max_backtracks,
            certainty_threshold: self.certainty_threshold,
            ..GenConfig::default()
        };
        DataConfig { gen, starts_per_map: self.starts_per_map, min_start_dist: self.min_start_dist, seed }
    }
}

#[derive(Args, Clone)]
struct WorkerArgs {
    /// Episode-level worker threads; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args, Clone)]
struct SftArgs {
    #[arg(long, default_value_t = 300)]
    sft_steps: usize,
    #[arg(long, default_value_t = 0.5)]
    sft_lr: f64,
}

#[derive(Args, Clone)]
struct GrpoArgs {
    #[arg(long, default_value_t = 200)]
    grpo_steps: usize,
    #[arg(long, default_value_t = 0.5)]
    grpo_lr: f64,
    #[arg(long, default_value_t = 5)]
    group_size: usize,
    #[arg(long, default_value_t = 0.01)]
    beta_kl: f64,
    /// Softmax temperature of the distance-aware rewards.
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    /// Bonus ratio of the hybrid reward.
    #[arg(long, default_value_t = 1.0)]
    beta_max: f64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate seeded maps into <out>/maps.
    Genmaps {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long, default_value_t = 40)]
        count: usize,
        #[command(flatten)]
        map: MapArgs,
    },
    /// Roll out the oracle on every map and write <out>/corpus.jsonl.
    Gendata {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seed: SeedArg,
        /// Directory of map_<seed>.txt files.
        #[arg(long)]
        maps: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        nav: NavArgs,
        #[command(flatten)]
        workers: WorkerArgs,
    },
    /// Reward scenario table and certainty-gap sweep as CSV.
    RewardAnalyze {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', action = ArgAction::Set, default_value = "0.1,0.25,0.5,1.0,2.0")]
        taus: Vec<f64>,
        #[arg(long, value_delimiter = ',', action = ArgAction::Set, default_value = "0.0,0.25,0.5,1.0,2.0")]
        betas: Vec<f64>,
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
    },
    /// Imitation training on a corpus; writes <out>/sft.ckpt.
    Sft {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 64)]
        batch_size: usize,
        #[command(flatten)]
        sft: SftArgs,
        #[command(flatten)]
        features: FeatureArgs,
    },
    /// Reward fine-tuning from a checkpoint; writes <out>/grpo_<family>.ckpt.
    Grpo {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        corpus: PathBuf,
        /// Starting point and KL anchor.
        #[arg(long)]
        init: PathBuf,
        #[arg(long, default_value = "hybrid")]
        family: RewardFamily,
        #[arg(long, default_value_t = 64)]
        batch_size: usize,
        #[command(flatten)]
        grpo: GrpoArgs,
        #[command(flatten)]
        features: FeatureArgs,
    },
    /// Evaluate checkpoints (and optionally baselines); writes <out>/eval.csv.
    Eval {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seed: SeedArg,
        /// Comma-separated checkpoints; rows are named after the file stem.
        #[arg(long, value_delimiter = ',', action = ArgAction::Set)]
        ckpt: Vec<PathBuf>,
        /// Directory of map_<seed>.txt files.
        #[arg(long)]
        maps: PathBuf,
        /// Also evaluate the random and oracle policies.
        #[arg(long)]
        baselines: bool,
        #[arg(long, default_value_t = 200)]
        episodes: usize,
        #[arg(long, default_value_t = 3.0)]
        min_start_dist: f64,
        #[command(flatten)]
        nav: NavArgs,
        #[command(flatten)]
        features: FeatureArgs,
        #[command(flatten)]
        workers: WorkerArgs,
    },
    /// Every stage end to end from one seed.
    Pipeline {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long, default_value_t = 40)]
        train_maps: usize,
        #[arg(long, default_value_t = 20)]
        eval_maps: usize,
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 64)]
        batch_size: usize,
        #[command(flatten)]
        sft: SftArgs,
        #[command(flatten)]
        grpo: GrpoArgs,
        #[arg(long, value_delimiter = ',', action = ArgAction::Set, default_value = "binary,minmax,softmax,hybrid")]
        families: Vec<RewardFamily>,
        #[arg(long, default_value_t = 200)]
        episodes: usize,
        #[command(flatten)]
        nav: NavArgs,
        #[command(flatten)]
        features: FeatureArgs,
        #[command(flatten)]
        workers: WorkerArgs,
    },
}

fn create_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        create_out(parent)?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_maps(dir: &Path, maps: &[(u64, OccupancyGrid)]) -> Result<()> {
    create_out(dir)?;
    for (seed, g) in maps {
        write_file(&dir.join(format!("map_{seed}.txt")), &g.to_map_string())?;
    }
    Ok(())
}

/// Loads every `map_<seed>.txt` in `dir`, ordered by seed.
fn read_maps(dir: &Path) -> Result<Vec<(u64, OccupancyGrid)>> {
    let entries = fs::read_dir(dir).with_context(|| format!("reading map directory {}", dir.display()))?;
    let mut maps = Vec::new();
    for entry in entries {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let Some(seed) = name.strip_prefix("map_").and_then(|n| n.strip_suffix(".txt")) else {
            continue;
        };
        let seed: u64 = seed
            .parse()
            .with_context(|| format!("{}: map files must be named map_<seed>.txt", path.display()))?;
        let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
        let grid = load_map(&bytes).with_context(|| format!("parsing {}", path.display()))?;
        maps.push((seed, grid));
    }
    if maps.is_empty() {
        bail!("no map_<seed>.txt files in {}; run `compass genmaps` first", dir.display());
    }
    maps.sort_by_key(|(s, _)| *s);
    Ok(maps)
}

fn read_states(path: &Path) -> Result<Vec<compass_core::learner::TrainingState>> {
    let corpus =
        read_corpus(&read_file(path)?).with_context(|| format!("parsing corpus {}", path.display()))?;
    let states = states_from_corpus(&corpus);
    if states.is_empty() {
        bail!("corpus {} holds no decision steps", path.display());
    }
    Ok(states)
}

fn load_ckpt(path: &Path) -> Result<PolicyParams> {
    let p = read_checkpoint(&read_file(path)?)
        .with_context(|| format!("parsing checkpoint {}", path.display()))?;
    if p.dim() != FEATURE_DIM {
        bail!("checkpoint {} has dimension {}, expected {FEATURE_DIM}", path.display(), p.dim());
    }
    Ok(p)
}

fn save_ckpt(path: &Path, params: &PolicyParams) -> Result<()> {
    let mut buf = Vec::new();
    write_checkpoint(params, &mut buf)?;
    write_file(path, &String::from_utf8(buf).expect("checkpoints are ASCII"))
}

fn save_corpus(path: &Path, records: &[compass_core::datagen::EpisodeRecord]) -> Result<usize> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(write_records(records, &mut BufWriter::new(file))?)
}

fn sft_config(seed: u64, batch_size: usize, args: &SftArgs, features: FeatureConfig) -> Result<SftConfig> {
    if !(args.sft_lr > 0.0) || batch_size == 0 {
        bail!("--sft-lr must be positive and --batch-size nonzero");
    }
    Ok(SftConfig { steps: args.sft_steps, batch_size, lr: args.sft_lr, seed, features, eval_every: 0 })
}

fn grpo_config(seed: u64, batch_size: usize, args: &GrpoArgs, features: FeatureConfig) -> Result<GrpoConfig> {
    if !(args.grpo_lr > 0.0) || batch_size == 0 || args.group_size < 2 || !(args.beta_kl >= 0.0) {
        bail!("GRPO needs --grpo-lr > 0, --batch-size > 0, --group-size >= 2 and --beta-kl >= 0");
    }
    let mut cfg = GrpoConfig { steps: args.grpo_steps, batch_size, seed, features, ..GrpoConfig::default() };
    cfg.grpo.lr = args.grpo_lr;
    cfg.grpo.group_size = args.group_size;
    cfg.grpo.beta_kl = args.beta_kl;
    cfg.grpo.reward.tau = args.tau;
    cfg.grpo.reward.beta_max = args.beta_max;
    cfg.grpo.reward.validate()?;
    Ok(cfg)
}

fn eval_label(path: &Path) -> (String, String) {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("policy");
    match stem.split_once('_') {
        Some((policy, family)) => (policy.to_string(), family.to_string()),
        None => (stem.to_string(), "-".to_string()),
    }
}

fn last_row(log: &[LogRow]) -> String {
    log.last().map_or_else(String::new, |r| {
        format!("loss {:.4}, mean reward {:.4}, kl {:.5}", r.loss, r.mean_reward, r.kl)
    })
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Genmaps { common, seed, count, map } => {
            let maps = pipeline::gen_maps(seed.seed, &map.spec(count)?);
            write_maps(&common.out.join("maps"), &maps)?;
            eprintln!("wrote {} maps to {}", maps.len(), common.out.join("maps").display());
        }
        Cmd::Gendata { common, seed, maps, data, nav, workers } => {
            let maps = read_maps(&maps)?;
            let cfg = data.config(nav.config()?, seed.seed);
            let (corpus, report) = pipeline::gen_data(&maps, &cfg, workers.workers)?;
            create_out(&common.out)?;
            let lines = save_corpus(&common.out.join("corpus.jsonl"), &corpus)?;
            eprintln!(
                "kept {} episodes ({} steps, {lines} lines); rejected {} timeout, {} turn loop, {} cell loop",
                report.kept,
                report.steps,
                report.rejected_timeout,
                report.rejected_turn_loop,
                report.rejected_cell_loop
            );
        }
        Cmd::RewardAnalyze { common, taus, betas, epsilon } => {
            if taus.is_empty() || betas.is_empty() {
                bail!("--taus and --betas need at least one value each");
            }
            if let Some(b) = betas.iter().find(|b| !(**b >= 0.0)) {
                bail!("--betas must be non-negative, got {b}");
            }
            let rows = sweep_gap(
                &taus,
                &betas,
                &reward::scenarios::DECISIVE,
                &reward::scenarios::AMBIGUOUS,
                epsilon,
            )?;
            write_file(&common.out.join("reward_gap.csv"), &gap_csv(&rows))?;
            let params = RewardParams { epsilon, ..RewardParams::default() };
            write_file(&common.out.join("reward_scenarios.csv"), &scenario_table(&params)?)?;
            eprintln!("wrote {} sweep rows to {}", rows.len(), common.out.join("reward_gap.csv").display());
        }
        Cmd::Sft { common, seed, corpus, batch_size, sft, features } => {
            let states = read_states(&corpus)?;
            let cfg = sft_config(seed.seed, batch_size, &sft, features.config()?)?;
            let (params, log) = train_sft(&states, &cfg, PolicyParams::zeros(FEATURE_DIM), None)?;
            save_ckpt(&common.out.join("sft.ckpt"), &params)?;
            write_file(&common.out.join("sft_log.csv"), &log_csv(&log))?;
            eprintln!("sft on {} states: {}", states.len(), last_row(&log));
        }
        Cmd::Grpo { common, seed, corpus, init, family, batch_size, grpo, features } => {
            let states = read_states(&corpus)?;
            let reference = load_ckpt(&init)?;
            let mut cfg = grpo_config(seed.seed, batch_size, &grpo, features.config()?)?;
            cfg.grpo.reward.family = family;
            let (params, log) = train_grpo(&states, &cfg, reference.clone(), &reference, None)?;
            save_ckpt(&common.out.join(format!("grpo_{family}.ckpt")), &params)?;
            write_file(&common.out.join(format!("grpo_{family}_log.csv")), &log_csv(&log))?;
            eprintln!("grpo ({family}) on {} states: {}", states.len(), last_row(&log));
        }
        Cmd::Eval {
            common,
            seed,
            ckpt,
            maps,
            baselines,
            episodes,
            min_start_dist,
            nav,
            features,
            workers,
        } => {
            if ckpt.is_empty() && !baselines {
                bail!("nothing to evaluate: pass --ckpt and/or --baselines");
            }
            if episodes == 0 {
                bail!("--episodes must be positive");
            }
            let maps = read_maps(&maps)?;
            let cfg = EvalConfig { nav: nav.config()?, features: features.config()? };
            let grids = maps.into_iter().map(|(_, g)| g).collect();
            let suite = EvalSuite::build(
                grids,
                episodes,
                seed.seed.wrapping_add(EVAL_SEED_OFFSET),
                min_start_dist,
                cfg.nav.success_radius,
            )?;
            let mut jobs: Vec<(String, String, Policy)> = Vec::new();
            if baselines {
                jobs.push(("random".into(), "-".into(), Policy::Random));
                jobs.push(("oracle".into(), "-".into(), Policy::Oracle));
            }
            for path in &ckpt {
                let (policy, family) = eval_label(path);
                jobs.push((policy, family, Policy::Learned(load_ckpt(path)?)));
            }
            let mut rows = Vec::new();
            for (label, family, policy) in &jobs {
                let outcomes = suite.run(policy, &cfg, workers.workers)?;
                rows.push(compass_core::eval::aggregate(label, family, &outcomes)?);
            }
            let csv = summary_csv(&rows);
            write_file(&common.out.join("eval.csv"), &csv)?;
            print!("{csv}");
        }
        Cmd::Pipeline {
            common,
            seed,
            train_maps,
            eval_maps,
            map,
            data,
            batch_size,
            sft,
            grpo,
            families,
            episodes,
            nav,
            features,
            workers,
        } => {
            if families.is_empty() || episodes == 0 {
                bail!("--families needs at least one entry and --episodes must be positive");
            }
            let nav = nav.config()?;
            let features = features.config()?;
            let cfg = PipelineConfig {
                train_maps: map.spec(train_maps)?,
                eval_maps: map.spec(eval_maps)?,
                data: data.config(nav, seed.seed),
                sft: sft_config(seed.seed, batch_size, &sft, features)?,
                grpo: grpo_config(seed.seed, batch_size, &grpo, features)?,
                eval: EvalConfig { nav, features },
                eval_episodes: episodes,
                families,
                workers: workers.workers,
                ..PipelineConfig::default()
            }
            .with_seed(seed.seed);
            let out = pipeline::run_pipeline(&cfg)?;
            let dir = &common.out;
            write_maps(&dir.join("maps").join("train"), &out.train_maps)?;
            write_maps(&dir.join("maps").join("eval"), &out.eval_maps)?;
            save_corpus(&dir.join("corpus.jsonl"), &out.corpus)?;
            save_ckpt(&dir.join("sft.ckpt"), &out.sft)?;
            write_file(&dir.join("sft_log.csv"), &log_csv(&out.sft_log))?;
            for run in &out.grpo {
                save_ckpt(&dir.join(format!("grpo_{}.ckpt", run.family)), &run.params)?;
                write_file(&dir.join(format!("grpo_{}_log.csv", run.family)), &log_csv(&run.log))?;
            }
            let csv = summary_csv(&out.summaries);
            write_file(&dir.join("eval.csv"), &csv)?;
            let r = &out.data_report;
            eprintln!("corpus: {} episodes, {} steps", r.kept, r.steps);
            print!("{csv}");
        }
    }
    Ok(())
}

fn real_main() -> Result<()> {
    let mut command = Cli::command().mut_subcommands(|s| s.args_override_self(true));
    let args = config::expand_args(&command, std::env::args().collect())?;
    let matches = command.try_get_matches_from_mut(args).unwrap_or_else(|e| e.exit());
    let cli = Cli::from_arg_matches(&matches).unwrap_or_else(|e| e.exit());
    if let Some((name, sub)) = matches.subcommand() {
        let out = sub.get_one::<PathBuf>("out").expect("every subcommand has --out");
        let spec = command.find_subcommand(name).expect("parsed subcommand exists");
        let rendered = config::render(spec, sub);
        run(cli.cmd)?;
        write_file(&out.join(format!("{name}.conf")), &rendered)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
