//! End-to-end acceptance checks, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so every line is printed even when an
//! earlier check fails; the process exits nonzero if any check fails.

#![allow(clippy::excessive_precision)]

mod common;

use std::f64::consts::{FRAC_PI_2, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::Rng;

use compass_core::controller::translate;
use compass_core::datagen::{
    generate_episode, read_corpus, write_records, EpisodeRecord, GenConfig, Outcome,
};
use compass_core::eval::{spl, start_candidates};
use compass_core::geodesic::{distance_field, shortest_path_cost};
use compass_core::learner::{
    grpo_loss_grad, sample_group, sft_loss_grad, GrpoState, PolicyParams, SftExample, FEATURE_DIM,
};
use compass_core::pipeline::{run_pipeline, PipelineConfig};
use compass_core::proposer::{angular_gap, propose, ProposerParams};
use compass_core::reward::{self, RewardFamily, RewardParams};
use compass_core::rng::seeded;
use compass_core::world::{
    from_ascii, generate_map, raycast_depth, update_exploration, Cell, DepthScan, ExplorationMap, Pose,
    Primitive,
};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, started: Instant) -> Result<(), String> {
    let t = started.elapsed();
    ensure(t <= limit, || format!("took {t:.2?}, limit {limit:?}"))
}

fn c1_golden_values() -> Check {
    let d = reward::scenarios::INDISTINGUISHABLE;
    let hybrid = RewardParams::default();
    let minmax = RewardParams { family: RewardFamily::MinMax, ..hybrid };
    for i in 0..d.len() {
        let h = hybrid.score(&d, i).map_err(|e| e.to_string())?;
        ensure((h - 0.25).abs() <= 1e-12, || format!("hybrid[{i}] = {h}"))?;
        let m = minmax.score(&d, i).map_err(|e| e.to_string())?;
        ensure(m == 1.0, || format!("minmax[{i}] = {m}"))?;
    }
    Ok("four equal distances: hybrid 0.25 for every action, minmax 1.0".into())
}

fn c2_reward_pattern() -> Check {
    // Independent 40-digit evaluation, frozen before the implementation.
    const DECISIVE: [f64; 3] = [1.0, 0.017980286735531545, 0.00032932043896389291];
    const AMBIGUOUS: [f64; 3] = [0.59908562226615518, 0.44955330549052011, 0.0013610472433372075];
    let p = RewardParams::default();
    for (d, want) in [(&reward::scenarios::DECISIVE, DECISIVE), (&reward::scenarios::AMBIGUOUS, AMBIGUOUS)] {
        for (i, w) in want.iter().enumerate() {
            let got = p.score(d, i).map_err(|e| e.to_string())?;
            ensure((got - w).abs() <= 1e-6, || format!("{d:?}[{i}]: {got} vs {w}"))?;
        }
    }
    let (best, second) = (p.score(&[1.0, 3.0, 5.0], 0).unwrap(), p.score(&[1.0, 3.0, 5.0], 1).unwrap());
    ensure(best == 1.0 && second < 0.02, || format!("decisive {best} / {second}"))?;
    let (a, b) = (p.score(&[2.0, 2.1, 5.0], 0).unwrap(), p.score(&[2.0, 2.1, 5.0], 1).unwrap());
    ensure((a - b).abs() < 0.16 && [a, b].iter().all(|x| *x > 0.0 && *x < 1.0), || {
        format!("ambiguous {a} / {b}")
    })?;
    Ok(format!("decisive {best:.4} vs {second:.4}; ambiguous {a:.4} vs {b:.4}"))
}

fn c3_reward_properties() -> Check {
    let started = Instant::now();
    let mut rng = seeded(3, 0);
    for case in 0..10_000 {
        let n = rng.random_range(2..=8);
        // (0, 20]: reflect the half-open sampler.
        let d: Vec<f64> = (0..n).map(|_| 20.0 - rng.random_range(0.0..20.0)).collect();
        let base = reward::base_scores(&d, 0.5).map_err(|e| e.to_string())?;
        ensure((base.iter().sum::<f64>() - 1.0).abs() <= 1e-12, || format!("case {case}: base sum"))?;
        let best = reward::argmin(&d).unwrap();
        for family in RewardFamily::ALL {
            let p = RewardParams { family, ..RewardParams::default() };
            let scores: Vec<f64> = (0..n).map(|i| p.score(&d, i).unwrap()).collect();
            ensure(scores.iter().all(|s| (0.0..=1.0).contains(s)), || {
                format!("case {case}: {family} {scores:?}")
            })?;
            if family != RewardFamily::Binary {
                let top = scores.iter().cloned().fold(f64::MIN, f64::max);
                ensure(scores[best] == top, || format!("case {case}: {family} argmax != argmin"))?;
            }
        }
        let g = reward::certainty(&d, 1e-6);
        ensure((0.0..=1.0).contains(&g), || format!("case {case}: g = {g}"))?;
        let k = rng.random_range(0.1..10.0);
        let scaled: Vec<f64> = d.iter().map(|x| x * k).collect();
        let (g0, gk) = (reward::certainty(&d, 0.0), reward::certainty(&scaled, 0.0));
        ensure((g0 - gk).abs() <= 1e-12, || format!("case {case}: scale {g0} vs {gk}"))?;
    }
    within(Duration::from_secs(5), started)?;
    Ok(format!("10000 vectors in {:.2?}", started.elapsed()))
}

fn c4_geodesic_oracle() -> Check {
    let started = Instant::now();
    let mut queries = 0;
    let mut unreachable = 0;
    for seed in 0..50u64 {
        let g = generate_map(seed, 20, 0.25);
        let free = common::free_cells(&g);
        let mut rng = seeded(seed, 4);
        for _ in 0..20 {
            let a = free[rng.random_range(0..free.len())];
            let b = free[rng.random_range(0..free.len())];
            let astar = shortest_path_cost(&g, a, b).map_err(|e| e.to_string())?;
            let brute = common::brute_dijkstra(&g, a, b);
            ensure(astar == brute, || format!("map {seed} {a:?}->{b:?}: {astar:?} vs {brute:?}"))?;
            unreachable += astar.is_none() as usize;
            queries += 1;
        }
    }
    within(Duration::from_secs(10), started)?;
    Ok(format!("{queries} queries identical ({unreachable} unreachable) in {:.2?}", started.elapsed()))
}

fn c5_proposer_invariants() -> Check {
    let started = Instant::now();
    let p = ProposerParams::default();
    let mut rng = seeded(5, 0);
    for case in 0..500 {
        let g = generate_map(case, 15, 0.25);
        let free = common::free_cells(&g);
        let pose = Pose::at_cell(&g, free[rng.random_range(0..free.len())], rng.random_range(-PI..PI));
        let scan = raycast_depth(&g, &pose, 120f64.to_radians(), 60, 5.0);
        let mut ex = ExplorationMap::new(&g);
        for _ in 0..rng.random_range(0..4) {
            let at = Pose::at_cell(&g, free[rng.random_range(0..free.len())], 0.0);
            ex = update_exploration(&ex, &g, &at, rng.random_range(0.5..3.0));
        }
        let set = propose(&g, &scan, &pose, &ex, &p);
        ensure(!set.is_empty(), || format!("case {case}: empty set"))?;
        let nav: Vec<_> = set.iter().filter(|c| !c.is_turn_around()).collect();
        for (i, a) in nav.iter().enumerate() {
            let ray = scan.ray_angles.iter().position(|t| *t == a.theta).map(|j| scan.ray_ranges[j]);
            let ray = ray.ok_or_else(|| format!("case {case}: θ {} is not a ray angle", a.theta))?;
            ensure(a.r <= (p.safety_factor * ray).min(p.r_max), || {
                format!("case {case}: r {} vs ray {ray}", a.r)
            })?;
            for b in &nav[i + 1..] {
                let need = if a.unexplored && b.unexplored { p.theta_delta } else { p.theta_big_delta };
                ensure(angular_gap(a.theta, b.theta) >= need, || {
                    format!("case {case}: spacing {a:?} {b:?}")
                })?;
            }
        }
    }
    let g = compass_core::world::open_room(9, 9);
    let pose = Pose::at_cell(&g, Cell::new(4, 4), 0.0);
    let boxed = DepthScan {
        ray_angles: (0..60).map(|i| 120f64.to_radians() * (i as f64 / 59.0 - 0.5)).collect(),
        ray_ranges: vec![0.1; 60],
        max_range: 5.0,
    };
    let set = propose(&g, &boxed, &pose, &ExplorationMap::new(&g), &p);
    ensure(set.len() == 1 && set[0].is_turn_around() && set[0].theta == PI && set[0].r == 0.0, || {
        format!("boxed-in agent got {set:?}")
    })?;
    within(Duration::from_secs(5), started)?;
    Ok(format!("500 instances plus the boxed-in fallback in {:.2?}", started.elapsed()))
}

fn c6_controller_grid() -> Check {
    let started = Instant::now();
    let mut cases = 0;
    for deg in (-180i32..=180).step_by(5) {
        for step in 0..=40 {
            let (theta, r) = ((deg as f64).to_radians(), step as f64 * 0.05);
            let seq = translate(r, theta).map_err(|e| e.to_string())?;
            let turns = (deg.unsigned_abs() as usize).div_ceil(30);
            let forwards = (step as usize).div_ceil(5);
            let turn = if deg > 0 { Primitive::TurnLeft } else { Primitive::TurnRight };
            let mut want = vec![turn; turns];
            want.extend(std::iter::repeat_n(Primitive::MoveForward, forwards));
            ensure(seq == want, || format!("θ={deg}° r={r}: {seq:?}"))?;
            cases += 1;
        }
    }
    within(Duration::from_secs(1), started)?;
    Ok(format!("{cases} (θ, r) pairs exact"))
}

const TWO_CORRIDORS: [&str; 17] = [
    "#####################",
    "#...................#",
    "#.........G.........#",
    "#...................#",
    "#...................#",
    "#...#############...#",
    "#...#############...#",
    "#...#############...#",
    "#...#############...#",
    "#...#############...#",
    "#...#############...#",
    "#...#############...#",
    "#...................#",
    "#...................#",
    "#...................#",
    "#...................#",
    "#####################",
];

fn c7_corpus_integrity() -> Check {
    let started = Instant::now();
    let cfg = GenConfig::default();
    let mut all: Vec<EpisodeRecord> = Vec::new();
    for seed in 0..100u64 {
        let g = generate_map(seed, 15, 0.2);
        let f = distance_field(&g, g.goal().cell).map_err(|e| e.to_string())?;
        let starts = start_candidates(&g, &f, 2.0, cfg.nav.success_radius);
        let start = starts[seeded(seed, 7).random_range(0..starts.len())];
        for mut rec in generate_episode(&g, &f, seed, start, &cfg).map_err(|e| e.to_string())? {
            for s in &rec.steps {
                ensure(
                    s.distances.len() == s.candidates.len() && s.distances.iter().all(|d| d.is_finite()),
                    || format!("map {seed} step {}: distances {:?}", s.step_index, s.distances),
                )?;
                let best = reward::argmin(&s.distances).unwrap();
                ensure(s.candidates[best].id == s.optimal_id, || {
                    format!("map {seed} step {}: optimal id", s.step_index)
                })?;
            }
            rec.set_id(all.len());
            all.push(rec);
        }
    }
    let mut first = Vec::new();
    write_records(&all, &mut first).map_err(|e| e.to_string())?;
    let back = read_corpus(std::str::from_utf8(&first).unwrap()).map_err(|e| e.to_string())?;
    let mut second = Vec::new();
    write_records(&back, &mut second).map_err(|e| e.to_string())?;
    ensure(first == second, || "write/read/write is not byte-identical".into())?;

    let g = from_ascii(&TWO_CORRIDORS, "sofa");
    let f = distance_field(&g, g.goal().cell).unwrap();
    let recs = generate_episode(&g, &f, 0, Pose::at_cell(&g, Cell::new(10, 14), -FRAC_PI_2), &cfg)
        .map_err(|e| e.to_string())?;
    let ok: Vec<_> = recs.iter().filter(|r| r.outcome == Outcome::Success).collect();
    let via = |pred: fn(f64) -> bool| {
        ok.iter().any(|r| r.steps.iter().any(|s| (1.25..3.0).contains(&s.pose.y) && pred(s.pose.x)))
    };
    let (left, right) = (via(|x| x < 1.0), via(|x| x > 4.25));
    ensure(ok.len() >= 2 && left && right, || format!("{} successes, left {left}, right {right}", ok.len()))?;
    within(Duration::from_secs(120), started)?;
    Ok(format!(
        "100 episodes -> {} records, {} bytes round-trip; two-corridor map: {} successful records over both corridors",
        all.len(),
        first.len(),
        ok.len()
    ))
}

fn random_instance<R: Rng>(rng: &mut R) -> (Vec<Vec<f64>>, Vec<f64>) {
    let k = rng.random_range(2..8);
    let feats = (0..k).map(|_| (0..FEATURE_DIM).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    (feats, (0..k).map(|_| rng.random_range(0.1..10.0)).collect())
}

fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / norm(a).max(norm(b)).max(f64::MIN_POSITIVE)
}

fn central_diff(params: &PolicyParams, f: impl Fn(&PolicyParams) -> f64) -> Vec<f64> {
    let h = 1e-5;
    (0..params.dim())
        .map(|k| {
            let (mut up, mut dn) = (params.clone(), params.clone());
            up.w[k] += h;
            dn.w[k] -= h;
            (f(&up) - f(&dn)) / (2.0 * h)
        })
        .collect()
}

fn c8c_gradient_checks() -> Check {
    let mut rng = seeded(8, 3);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let params = PolicyParams { w: (0..FEATURE_DIM).map(|_| rng.random_range(-1.5..1.5)).collect() };
        let reference = PolicyParams { w: (0..FEATURE_DIM).map(|_| rng.random_range(-1.5..1.5)).collect() };
        let batch: Vec<SftExample> = (0..4)
            .map(|_| {
                let (features, _) = random_instance(&mut rng);
                let target = rng.random_range(0..features.len());
                SftExample { features, target }
            })
            .collect();
        let (_, g) = sft_loss_grad(&params, &batch).map_err(|e| e.to_string())?;
        let fd = central_diff(&params, |p| sft_loss_grad(p, &batch).unwrap().0);
        let e_sft = rel_error(&g, &fd);

        let states: Vec<GrpoState> = (0..4)
            .map(|_| {
                let (features, distances) = random_instance(&mut rng);
                GrpoState { features, distances }
            })
            .collect();
        let groups: Vec<_> = states
            .iter()
            .map(|s| sample_group(&params, s, 5, &RewardParams::default(), &mut rng).unwrap())
            .collect();
        let (_, g, _) =
            grpo_loss_grad(&params, &reference, &states, &groups, 0.01).map_err(|e| e.to_string())?;
        let fd = central_diff(&params, |p| grpo_loss_grad(p, &reference, &states, &groups, 0.01).unwrap().0);
        let e_grpo = rel_error(&g, &fd);
        ensure(e_sft < 1e-5 && e_grpo < 1e-5, || format!("case {case}: sft {e_sft:.2e}, grpo {e_grpo:.2e}"))?;
        worst = worst.max(e_sft).max(e_grpo);
    }
    Ok(format!("100 instances, worst relative error {worst:.1e}"))
}

struct Table {
    csv: String,
    sr: Vec<(String, f64)>,
    spl_ok: bool,
    elapsed: Duration,
}

fn pipeline_table() -> Result<Table, String> {
    let started = Instant::now();
    let out = run_pipeline(&PipelineConfig::default()).map_err(|e| e.to_string())?;
    Ok(Table {
        csv: compass_core::eval::summary_csv(&out.summaries),
        sr: out.summaries.iter().map(|s| (format!("{}/{}", s.policy, s.reward_family), s.sr)).collect(),
        spl_ok: out.summaries.iter().all(|s| s.spl <= s.sr),
        elapsed: started.elapsed(),
    })
}

fn sr(t: &Table, key: &str) -> f64 {
    t.sr.iter().find(|(k, _)| k == key).map(|(_, v)| *v).expect("row present")
}

fn c8a_sft_beats_random(t: &Table) -> Check {
    let (random, sft) = (sr(t, "random/-"), sr(t, "sft/-"));
    within(Duration::from_secs(600), Instant::now() - t.elapsed)?;
    ensure(sft >= random + 0.30, || format!("SFT {sft:.3} vs random {random:.3}"))?;
    Ok(format!("SFT {sft:.3} vs random {random:.3} (+{:.1} points)", 100.0 * (sft - random)))
}

fn c8b_grpo_beats_sft(t: &Table) -> Check {
    let (sft, grpo) = (sr(t, "sft/-"), sr(t, "grpo/hybrid"));
    ensure(grpo >= sft + 0.05, || {
        format!("GRPO(hybrid) {grpo:.3} vs SFT {sft:.3} ({:+.1} points, need +5)", 100.0 * (grpo - sft))
    })?;
    Ok(format!("GRPO(hybrid) {grpo:.3} vs SFT {sft:.3}"))
}

fn c9_family_table(t: &Table, again: &Table) -> Check {
    ensure(t.csv == again.csv, || "two runs gave different tables".into())?;
    let rows: Vec<&str> = t.csv.lines().filter(|l| l.starts_with("grpo,")).collect();
    let families: Vec<&str> = rows.iter().map(|l| l.split(',').nth(1).unwrap()).collect();
    ensure(families == ["binary", "minmax", "softmax", "hybrid"], || format!("rows {families:?}"))?;
    let (binary, hybrid) = (sr(t, "grpo/binary"), sr(t, "grpo/hybrid"));
    ensure(hybrid >= binary, || format!("hybrid {hybrid:.3} < binary {binary:.3} (table deterministic)"))?;
    Ok(format!("deterministic four-row table; hybrid {hybrid:.3} vs binary {binary:.3}"))
}

fn c10_heatmap() -> Check {
    let started = Instant::now();
    let taus = [0.1, 0.25, 0.5, 1.0, 2.0];
    let betas = [0.0, 0.25, 0.5, 1.0, 2.0];
    let (high, low) = (&reward::scenarios::DECISIVE, &reward::scenarios::AMBIGUOUS);
    let rows = reward::sweep_gap(&taus, &betas, high, low, 1e-6).map_err(|e| e.to_string())?;
    let at = rows.iter().find(|r| r.tau == 0.5 && r.beta == 1.0).ok_or("no (0.5, 1.0) row")?;
    ensure(at.gap_high - at.gap_low >= 0.5, || format!("gap_high {} gap_low {}", at.gap_high, at.gap_low))?;
    for r in rows.iter().filter(|r| r.beta == 0.0) {
        let sm = RewardParams { tau: r.tau, family: RewardFamily::Softmax, ..RewardParams::default() };
        let (hi, lo) =
            (reward::best_vs_second_gap(high, &sm).unwrap(), reward::best_vs_second_gap(low, &sm).unwrap());
        ensure((r.gap_high - hi).abs() <= 1e-9 && (r.gap_low - lo).abs() <= 1e-9, || {
            format!("τ={}: β=0 column", r.tau)
        })?;
    }
    within(Duration::from_secs(1), started)?;
    Ok(format!("(0.5, 1.0): {:.3} vs {:.3}; β=0 column equals softmax", at.gap_high, at.gap_low))
}

fn c11_metrics(t: &Table) -> Check {
    ensure(t.spl_ok, || "an aggregate has SPL > SR".into())?;
    let v = spl(&[true], &[10.0], &[12.5]).map_err(|e| e.to_string())?;
    ensure(v == 0.8, || format!("SPL example gave {v}"))?;
    Ok(format!("SPL <= SR on {} aggregates; l=10, p=12.5 gives exactly 0.8", t.sr.len()))
}

fn main() {
    let mut failed = 0;
    let mut report = |id: &str, name: &str, f: &mut dyn FnMut() -> Check| {
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("PASS {id:>3} {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {id:>3} {name}: {why}");
            }
        }
    };
    report("1", "reward golden values", &mut c1_golden_values);
    report("2", "decisive vs ambiguous pattern", &mut c2_reward_pattern);
    report("3", "reward properties", &mut c3_reward_properties);
    report("4", "A* vs brute-force Dijkstra", &mut c4_geodesic_oracle);
    report("5", "proposer invariants", &mut c5_proposer_invariants);
    report("6", "controller exhaustive grid", &mut c6_controller_grid);
    report("7", "corpus integrity", &mut c7_corpus_integrity);
    let tables = pipeline_table().and_then(|a| pipeline_table().map(|b| (a, b)));
    match &tables {
        Ok((t, again)) => {
            report("8a", "SFT beats random", &mut || c8a_sft_beats_random(t));
            report("8b", "GRPO beats SFT", &mut || c8b_grpo_beats_sft(t));
            report("8c", "gradient checks", &mut c8c_gradient_checks);
            report("9", "reward-family table", &mut || c9_family_table(t, again));
        }
        Err(e) => {
            for (id, name) in
                [("8a", "SFT beats random"), ("8b", "GRPO beats SFT"), ("9", "reward-family table")]
            {
                report(id, name, &mut || Err(format!("pipeline failed: {e}")));
            }
            report("8c", "gradient checks", &mut c8c_gradient_checks);
        }
    }
    report("10", "gap heatmap", &mut c10_heatmap);
    match &tables {
        Ok((t, _)) => report("11", "SR/SPL metrics", &mut || c11_metrics(t)),
        Err(e) => report("11", "SR/SPL metrics", &mut || Err(format!("pipeline failed: {e}"))),
    }
    println!("{failed} failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
