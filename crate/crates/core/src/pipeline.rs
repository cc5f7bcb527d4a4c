//! End-to-end stage orchestration: maps → corpus → SFT → GRPO per reward
//! family → evaluation. Every stage is a pure function of its inputs and a
//! seed; episode-level work fans out over a worker pool and is collected in
//! job order.

use rand::Rng;
use rayon::prelude::*;

use crate::datagen::{
    filter_episode, generate_episode, read_corpus, write_records, EpisodeRecord, GenConfig, RejectReason,
    Verdict,
};
use crate::error::{Error, Result};
use crate::eval::{aggregate, start_candidates, EvalConfig, EvalSuite, EvalSummary, Policy};
use crate::geodesic::distance_field;
use crate::learner::{
    states_from_corpus, train_grpo, train_sft, GrpoConfig, LogRow, PolicyParams, SftConfig, FEATURE_DIM,
};
use crate::reward::RewardFamily;
use crate::rng::seeded;
use crate::world::{generate_styled, MapStyle, OccupancyGrid};

/// Offset separating held-out evaluation map seeds from training seeds.
pub const EVAL_SEED_OFFSET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct MapSpec {
    pub count: usize,
    pub size: usize,
    pub obstacle_rate: f64,
    pub style: MapStyle,
}

impl Default for MapSpec {
    fn default() -> Self {
        Self { count: 40, size: 15, obstacle_rate: 0.5, style: MapStyle::Maze }
    }
}

/// `(map seed, grid)` pairs with seeds `base..base + count`.
pub fn gen_maps(base_seed: u64, spec: &MapSpec) -> Vec<(u64, OccupancyGrid)> {
    (0..spec.count as u64)
        .map(|i| {
            let s = base_seed.wrapping_add(i);
            (s, generate_styled(s, spec.size, spec.obstacle_rate, spec.style))
        })
        .collect()
}

pub(crate) fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataConfig {
    pub gen: GenConfig,
    pub starts_per_map: usize,
    /// Minimum geodesic start-to-goal distance in metres.
    pub min_start_dist: f64,
    pub seed: u64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self { gen: GenConfig::default(), starts_per_map: 4, min_start_dist: 3.0, seed: 0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DataReport {
    pub kept: usize,
    pub rejected_cell_loop: usize,
    pub rejected_turn_loop: usize,
    pub rejected_timeout: usize,
    pub steps: usize,
}

/// Runs every (map, start) job, filters the records and numbers the
/// survivors consecutively.
pub fn gen_data(
    maps: &[(u64, OccupancyGrid)],
    cfg: &DataConfig,
    workers: usize,
) -> Result<(Vec<EpisodeRecord>, DataReport)> {
    let jobs: Vec<(usize, usize)> =
        (0..maps.len()).flat_map(|m| (0..cfg.starts_per_map).map(move |k| (m, k))).collect();
    let run = |&(m, k): &(usize, usize)| -> Result<Vec<EpisodeRecord>> {
        let (seed, grid) = &maps[m];
        let field = distance_field(grid, grid.goal().cell)?;
        let starts = start_candidates(grid, &field, cfg.min_start_dist, cfg.gen.nav.success_radius);
        if starts.is_empty() {
            return Ok(Vec::new());
        }
        let mut rng = seeded(cfg.seed ^ seed.rotate_left(17), k as u64);
        let start = starts[rng.random_range(0..starts.len())];
        generate_episode(grid, &field, *seed, start, &cfg.gen)
    };
    let batches: Vec<Result<Vec<EpisodeRecord>>> =
        pool(workers)?.install(|| jobs.par_iter().map(run).collect());
    let mut report = DataReport::default();
    let mut out = Vec::new();
    for batch in batches {
        for mut rec in batch? {
            match filter_episode(&rec, &cfg.gen.filter) {
                Verdict::Keep => {
                    rec.set_id(out.len());
                    report.steps += rec.steps.len();
                    out.push(rec);
                }
                Verdict::Reject(RejectReason::CellLoop) => report.rejected_cell_loop += 1,
                Verdict::Reject(RejectReason::TurnLoop) => report.rejected_turn_loop += 1,
                Verdict::Reject(RejectReason::Timeout) => report.rejected_timeout += 1,
            }
        }
    }
    report.kept = out.len();
    Ok((out, report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    pub train_maps: MapSpec,
    pub eval_maps: MapSpec,
    pub data: DataConfig,
    pub sft: SftConfig,
    pub grpo: GrpoConfig,
    pub eval: EvalConfig,
    pub eval_episodes: usize,
    pub families: Vec<RewardFamily>,
    pub workers: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            train_maps: MapSpec::default(),
            eval_maps: MapSpec { count: 20, ..MapSpec::default() },
            data: DataConfig::default(),
            sft: SftConfig::default(),
            grpo: GrpoConfig::default(),
            eval: EvalConfig::default(),
            eval_episodes: 200,
            families: RewardFamily::ALL.to_vec(),
            workers: 1,
        }
    }
}

impl PipelineConfig {
    /// Derives every stage seed from the top-level one.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.data.seed = seed;
        self.sft.seed = seed;
        self.grpo.seed = seed;
        self
    }
}

pub struct GrpoRun {
    pub family: RewardFamily,
    pub params: PolicyParams,
    pub log: Vec<LogRow>,
}

pub struct PipelineOutput {
    pub train_maps: Vec<(u64, OccupancyGrid)>,
    pub eval_maps: Vec<(u64, OccupancyGrid)>,
    pub corpus: Vec<EpisodeRecord>,
    pub data_report: DataReport,
    pub sft: PolicyParams,
    pub sft_log: Vec<LogRow>,
    pub grpo: Vec<GrpoRun>,
    /// random, oracle, sft, then one row per GRPO family.
    pub summaries: Vec<EvalSummary>,
}

pub fn eval_suite(maps: &[(u64, OccupancyGrid)], cfg: &PipelineConfig) -> Result<EvalSuite> {
    EvalSuite::build(
        maps.iter().map(|(_, g)| g.clone()).collect(),
        cfg.eval_episodes,
        cfg.seed.wrapping_add(EVAL_SEED_OFFSET),
        cfg.data.min_start_dist,
        cfg.eval.nav.success_radius,
    )
}

pub fn evaluate(
    suite: &EvalSuite,
    label: &str,
    family: &str,
    policy: &Policy,
    cfg: &PipelineConfig,
) -> Result<EvalSummary> {
    let outcomes = suite.run(policy, &cfg.eval, cfg.workers)?;
    aggregate(label, family, &outcomes)
}

fn persisted(records: &[EpisodeRecord]) -> Result<Vec<EpisodeRecord>> {
    let mut buf = Vec::new();
    write_records(records, &mut buf)?;
    let text = String::from_utf8(buf).map_err(|e| Error::Invalid(e.to_string()))?;
    Ok(read_corpus(&text)?)
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let train_maps = gen_maps(cfg.seed, &cfg.train_maps);
    let eval_maps = gen_maps(cfg.seed.wrapping_add(EVAL_SEED_OFFSET), &cfg.eval_maps);
    let (corpus, data_report) = gen_data(&train_maps, &cfg.data, cfg.workers)?;
    // Train on the corpus as persisted so separate stage runs on the written
    // file reproduce the same weights.
    let corpus = persisted(&corpus)?;
    let states = states_from_corpus(&corpus);
    let (sft, sft_log) = train_sft(&states, &cfg.sft, PolicyParams::zeros(FEATURE_DIM), None)?;

    let mut grpo = Vec::new();
    for &family in &cfg.families {
        let mut g = cfg.grpo;
        g.grpo.reward.family = family;
        let (params, log) = train_grpo(&states, &g, sft.clone(), &sft, None)?;
        grpo.push(GrpoRun { family, params, log });
    }

    let suite = eval_suite(&eval_maps, cfg)?;
    let mut summaries = vec![
        evaluate(&suite, "random", "-", &Policy::Random, cfg)?,
        evaluate(&suite, "oracle", "-", &Policy::Oracle, cfg)?,
        evaluate(&suite, "sft", "-", &Policy::Learned(sft.clone()), cfg)?,
    ];
    for run in &grpo {
        summaries.push(evaluate(
            &suite,
            "grpo",
            run.family.name(),
            &Policy::Learned(run.params.clone()),
            cfg,
        )?);
    }
    Ok(PipelineOutput { train_maps, eval_maps, corpus, data_report, sft, sft_log, grpo, summaries })
}
