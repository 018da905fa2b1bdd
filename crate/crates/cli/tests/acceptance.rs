//! End-to-end acceptance checks. Run with
//! `cargo test -p swarmsim --test acceptance -- --nocapture` to see one
//! PASS/FAIL line per criterion.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swarm_core::config::BROADCAST_LEVELS;
use swarm_core::{
    BehaviorParams, HumanInput, Mode, Pose, SwarmConfig, Vec2, WheelCommand, World, WorldConstants,
};
use swarm_harness::stats::{ols_standardized, standardize};
use swarm_harness::sweep::{full_grid, run_sweep_to_csv, SweepSpec};
use swarm_harness::{fit_performance_model, SweepSummary, TrialResult};
use swarm_session::{run_round, InputKind, Key, LoggedInput, OperatorInput, RoundRunner, RoundSpec};

const MASTER_SEED: u64 = 1;
const SEEDS_PER_CONFIG: u32 = 10;

// pinned tolerances
const FASTEST_CONFIG_MAX: f64 = 25.0;
const SLOWEST_CONFIG_MIN: f64 = 85.0;
const GRAND_MEAN_RANGE: (f64, f64) = (45.0, 75.0);
const ALPHA: f64 = 0.05;
const GOSSIP_CASES: usize = 100;
const FLOCK_SEEDS: u64 = 100;
const FLOCK_REQUIRED: usize = 99;
const FLOCK_LIMIT: f64 = 60.0;
const MIN_SEPARATION: f64 = 6.9;
const REPLAY_LOGS: u64 = 20;
const OLS_REL_TOL: f64 = 0.05;

struct Report {
    lines: Vec<(bool, String)>,
}

impl Report {
    fn record(&mut self, pass: bool, line: String) {
        println!("[{}] {line}", if pass { "PASS" } else { "FAIL" });
        self.lines.push((pass, line));
    }
}

struct Sweep {
    bytes: Vec<u8>,
    results: Vec<TrialResult>,
    summary: SweepSummary,
}

fn sweep() -> Sweep {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let spec = SweepSpec::new(full_grid(), SEEDS_PER_CONFIG, MASTER_SEED);
    let run = run_sweep_to_csv(&spec, &path).unwrap();
    let summary = fit_performance_model(&run.results, spec.max_trial_duration).unwrap();
    Sweep {
        bytes: std::fs::read(&path).unwrap(),
        results: run.results,
        summary,
    }
}

fn envelope(report: &mut Report, s: &SweepSummary) {
    let (lo, hi) = GRAND_MEAN_RANGE;
    let pass = s.configs.len() == 125
        && s.configs.iter().all(|c| c.trials >= SEEDS_PER_CONFIG as usize)
        && s.min_config_mean <= FASTEST_CONFIG_MAX
        && s.max_config_mean >= SLOWEST_CONFIG_MIN
        && (lo..=hi).contains(&s.grand_mean);
    report.record(
        pass,
        format!(
            "1 completion-time envelope: {} configs x {} seeds, min config mean {:.2} s (<= {FASTEST_CONFIG_MAX}), \
             max config mean {:.2} s (>= {SLOWEST_CONFIG_MIN}), grand mean {:.2} s (in [{lo}, {hi}]), {} timeouts",
            s.configs.len(),
            SEEDS_PER_CONFIG,
            s.min_config_mean,
            s.max_config_mean,
            s.grand_mean,
            s.timeouts
        ),
    );
}

fn significance(report: &mut Report, s: &SweepSummary) {
    let terms: Vec<String> = ["speed", "separation", "broadcast"]
        .iter()
        .map(|name| match s.coefficient(name) {
            Some(c) => format!("{name} b={:.3} t={:.2} p={:.3e}", c.estimate, c.t, c.p),
            None => format!("{name} missing"),
        })
        .collect();
    let pass = ["speed", "separation", "broadcast"]
        .iter()
        .all(|name| s.coefficient(name).is_some_and(|c| c.p < ALPHA));
    report.record(
        pass,
        format!("2 regression significance: {} (each p < {ALPHA}), R2 {:.3}", terms.join(", "), s.r_squared),
    );
}

struct GossipCase {
    world: World,
    /// Informed tick fixed before the first step; `None` for the rest.
    sources: Vec<Option<u64>>,
    /// Tick at which a robot sitting in the region detects it by itself.
    self_detect: Vec<Option<u64>>,
    window: u64,
}

fn gossip_case(rng: &mut ChaCha8Rng) -> GossipCase {
    let n = rng.random_range(2..=6);
    let world_constants = WorldConstants {
        swarm_size: n,
        ..WorldConstants::default()
    };
    // mix grid levels with windows that are not whole seconds
    let broadcast = match rng.random_range(0..3) {
        0 => BROADCAST_LEVELS[rng.random_range(0..5)],
        1 => 0.0,
        _ => rng.random_range(0.0..3.0),
    };
    let mut config = SwarmConfig::new(BehaviorParams::new(10.0, 20.0, broadcast), rng.random());
    config.world = world_constants.clone();
    config.max_trial_duration = 30.0;
    let w = &config.world;
    // a compact box so that graphs are often connected but not always
    let side = rng.random_range(30.0..110.0);
    let origin = Vec2::new(rng.random_range(4.0..=w.arena_side - side - 4.0), rng.random_range(4.0..=w.arena_side - side - 4.0));
    let mut poses: Vec<Pose> = Vec::new();
    while poses.len() < n {
        let p = origin + Vec2::new(rng.random_range(0.0..side), rng.random_range(0.0..side));
        if poses.iter().all(|q| q.position.distance(p) >= w.robot_diameter + 0.5) {
            poses.push(Pose::new(p, rng.random_range(-PI..PI)));
        }
    }
    let lo = w.target_radius;
    let hi = w.arena_side - w.target_radius;
    // half the cases put the region over the robots so some detect it
    let center = if rng.random_bool(0.5) {
        let p = poses[rng.random_range(0..n)].position;
        Vec2::new(p.x.clamp(lo, hi), p.y.clamp(lo, hi))
    } else {
        Vec2::new(rng.random_range(lo..=hi), rng.random_range(lo..=hi))
    };
    let window = w.ticks_ceil(broadcast);
    let appear = w.appear_tick();
    let radius = w.target_radius;
    let mut world = World::from_layout(config, poses, center).unwrap();
    let mut sources = vec![None; n];
    let mut source_count = 0;
    for id in 0..n {
        if rng.random_bool(0.3) || (id == n - 1 && source_count == 0 && rng.random_bool(0.7)) {
            let mode = if window > 0 { Mode::ShareTarget } else { Mode::MoveToTarget };
            world.preset_informed(id, mode).unwrap();
            sources[id] = Some(0);
            source_count += 1;
        }
    }
    let self_detect = world
        .robots()
        .iter()
        .map(|r| (r.position().distance(center) <= radius).then_some(appear))
        .collect();
    GossipCase {
        world,
        sources,
        self_detect,
        window,
    }
}

/// Informed ticks on the static disk graph, computed tick by tick: a robot
/// informed at tick k relays during [k, k + window), and a relay sent on tick
/// t is read on t + 1. Also returns the total number of deliveries.
fn gossip_oracle(case: &GossipCase, positions: &[Vec2], comm_range: f64, ticks: u64) -> (Vec<Option<u64>>, u64) {
    let n = positions.len();
    let adjacent = |i: usize, j: usize| i != j && positions[i].distance_sq(positions[j]) <= comm_range * comm_range;
    let mut informed = case.sources.clone();
    let mut inbox = vec![false; n];
    let mut deliveries = 0;
    for t in 0..ticks {
        for i in 0..n {
            if informed[i].is_none() && (inbox[i] || case.self_detect[i].is_some_and(|d| t >= d)) {
                informed[i] = Some(t);
            }
        }
        let relaying: Vec<bool> = informed
            .iter()
            .map(|k| k.is_some_and(|k| t >= k && t < k + case.window))
            .collect();
        inbox = vec![false; n];
        for i in (0..n).filter(|&i| relaying[i]) {
            for j in (0..n).filter(|&j| adjacent(i, j)) {
                inbox[j] = true;
                deliveries += 1;
            }
        }
    }
    (informed, deliveries)
}

fn gossip(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6055_1950);
    let mut mismatches = Vec::new();
    let mut relayed = 0;
    let mut zero_window = 0;
    for case_index in 0..GOSSIP_CASES {
        let mut case = gossip_case(&mut rng);
        let n = case.world.robots().len();
        let ticks = case.world.config().max_ticks();
        let positions: Vec<Vec2> = case.world.robots().iter().map(|r| r.position()).collect();
        let comm_range = case.world.constants().comm_range;
        let (expected, expected_deliveries) = gossip_oracle(&case, &positions, comm_range, ticks);
        for _ in 0..ticks {
            case.world.step_scripted(&vec![WheelCommand::STOP; n]);
        }
        let moved = case.world.robots().iter().zip(&positions).any(|(r, p)| r.position() != *p);
        let got: Vec<Option<u64>> = case.world.robots().iter().map(|r| r.informed_at).collect();
        if got != expected || moved || case.world.messages_delivered() != expected_deliveries {
            mismatches.push(case_index);
        }
        relayed += expected
            .iter()
            .zip(&case.sources)
            .zip(&case.self_detect)
            .filter(|((e, s), d)| e.is_some() && s.is_none() && d.is_none())
            .count();
        zero_window += usize::from(case.window == 0);
    }
    report.record(
        mismatches.is_empty(),
        format!(
            "3 relay oracle: {}/{GOSSIP_CASES} static layouts of 2-6 robots match the 36 cm disk-graph oracle \
             exactly (informed ticks and delivery counts; {relayed} robots informed by relay, {zero_window} zero-window cases){}",
            GOSSIP_CASES - mismatches.len(),
            if mismatches.is_empty() { String::new() } else { format!(", mismatched cases {mismatches:?}") }
        ),
    );
}

fn flocking(report: &mut Report) {
    let mut converged = 0;
    let mut closest = f64::INFINITY;
    let mut slowest: f64 = 0.0;
    for seed in 0..FLOCK_SEEDS {
        let params = BehaviorParams::from_grid_id((seed % 125) as u32).unwrap();
        let config = SwarmConfig::new(params, 0xF10C_0000 + seed).with_limit(FLOCK_LIMIT);
        let mut world = World::new(config).unwrap();
        for id in 0..world.robots().len() {
            world.preset_informed(id, Mode::MoveToTarget).unwrap();
        }
        let limit = world.config().max_ticks();
        let mut ok = true;
        closest = closest.min(world.min_pair_distance());
        while world.completed_at().is_none() && world.tick() < limit {
            world.step(HumanInput::default());
            let d = world.min_pair_distance();
            closest = closest.min(d);
            ok &= d >= MIN_SEPARATION;
        }
        if let (true, Some(t)) = (ok, world.completion_time()) {
            converged += 1;
            slowest = slowest.max(t);
        }
    }
    report.record(
        converged >= FLOCK_REQUIRED && closest >= MIN_SEPARATION,
        format!(
            "4 flocking convergence: {converged}/{FLOCK_SEEDS} seeds bring all robots into the region within \
             {FLOCK_LIMIT} s (>= {FLOCK_REQUIRED}), slowest {slowest:.1} s, closest pair {closest:.3} cm (>= {MIN_SEPARATION})"
        ),
    );
}

fn scripted_log(seed: u64, ticks: u64) -> Vec<Vec<OperatorInput>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..ticks)
        .map(|_| {
            let mut inputs = Vec::new();
            while rng.random_bool(0.15) {
                let mut input = match rng.random_range(0..6) {
                    0 => OperatorInput::key_down(Key::Left),
                    1 => OperatorInput::key_down(Key::Right),
                    2 => OperatorInput::key_up(Key::Left),
                    3 => OperatorInput::key_up(Key::Right),
                    4 => OperatorInput::button(InputKind::ShareTarget),
                    _ => OperatorInput::button(InputKind::MoveToTarget),
                };
                input.client_time = rng.random_range(0.0..1e6);
                inputs.push(input);
            }
            inputs
        })
        .collect()
}

fn replay(report: &mut Report, first: &Sweep, second: &Sweep) {
    let same_csv = first.bytes == second.bytes;
    let mut identical = 0;
    let mut events = 0;
    for i in 0..REPLAY_LOGS {
        let spec = RoundSpec {
            round_index: i as u32 + 1,
            config: SwarmConfig::new(BehaviorParams::from_grid_id((i * 37 % 125) as u32).unwrap(), 0xDE7E_0000 + i),
            human_robot_id: (i % 10) as usize,
            time_limit: RoundSpec::STUDY_TIME_LIMIT,
        };
        let mut live = RoundRunner::new(spec.clone()).unwrap();
        let script = scripted_log(i, live.world().config().max_ticks());
        for inputs in script {
            if live.is_finished() {
                break;
            }
            live.step(inputs);
        }
        let recorded = live.outcome();
        events += recorded.input_log.len();
        // the log goes through its stored form before the replay
        let stored: Vec<LoggedInput> = serde_json::from_str(&serde_json::to_string(&recorded.input_log).unwrap()).unwrap();
        let replayed = run_round(&spec, &stored).unwrap();
        let again = run_round(&spec, &stored).unwrap();
        let bytes = |o: &swarm_session::RoundOutcome| serde_json::to_vec(o).unwrap();
        if replayed == recorded && again == recorded && bytes(&replayed) == bytes(&recorded) {
            identical += 1;
        }
    }
    let pass = same_csv && identical == REPLAY_LOGS;
    report.record(
        pass,
        format!(
            "5 determinism: sweep CSV {} across two runs with master seed {MASTER_SEED} ({} bytes); \
             {identical}/{REPLAY_LOGS} scripted operator logs ({events} events) replay to identical outcomes",
            if same_csv { "byte-identical" } else { "DIFFERS" },
            first.bytes.len()
        ),
    );
}

fn silent_without_broadcast(report: &mut Report, results: &[TrialResult]) {
    let zero: Vec<&TrialResult> = results.iter().filter(|r| r.params.broadcast == 0.0).collect();
    let configs: BTreeSet<u32> = zero.iter().map(|r| r.config_id).collect();
    let delivered: u64 = zero.iter().map(|r| r.deliveries).sum();
    let informed = zero.iter().flat_map(|r| &r.informed_at).filter(|t| t.is_some()).count();
    report.record(
        !zero.is_empty() && delivered == 0,
        format!(
            "6 zero broadcast: {} full trials over {} configs with T = 0 delivered {delivered} messages (== 0); \
             {informed} robots still informed by detection",
            zero.len(),
            configs.len()
        ),
    );
}

fn normal(rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.random_range(f64::EPSILON..1.0);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

fn synthetic_regression(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0150);
    let n = 1000;
    let sigma = 0.1;
    let v: Vec<f64> = (0..n).map(|_| rng.random_range(5.0..=15.0)).collect();
    let d: Vec<f64> = (0..n).map(|_| rng.random_range(4.0..=36.0)).collect();
    let t: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..=16.0)).collect();
    let (vz, dz, tz) = (standardize(&v).unwrap(), standardize(&d).unwrap(), standardize(&t).unwrap());
    let truth = [("intercept", 60.0), ("speed", -12.0), ("separation", 4.0), ("broadcast", -3.0)];
    let y: Vec<f64> = (0..n)
        .map(|i| truth[0].1 + truth[1].1 * vz[i] + truth[2].1 * dz[i] + truth[3].1 * tz[i] + sigma * normal(&mut rng))
        .collect();
    let fit = ols_standardized(&y, &[("speed", &v), ("separation", &d), ("broadcast", &t)]).unwrap();
    let mut worst: f64 = 0.0;
    let terms: Vec<String> = truth
        .iter()
        .map(|&(name, b)| {
            let est = fit.coefficient(name).map_or(f64::NAN, |c| c.estimate);
            let rel = ((est - b) / b).abs();
            worst = worst.max(if rel.is_nan() { f64::INFINITY } else { rel });
            format!("{name} {est:.4} (true {b})")
        })
        .collect();
    report.record(
        worst <= OLS_REL_TOL,
        format!(
            "7 synthetic regression: n={n}, sigma={sigma}: {}; worst relative error {:.3}% (<= {}%)",
            terms.join(", "),
            100.0 * worst,
            100.0 * OLS_REL_TOL
        ),
    );
}

#[test]
fn acceptance() {
    let mut report = Report { lines: Vec::new() };
    let first = sweep();
    envelope(&mut report, &first.summary);
    significance(&mut report, &first.summary);
    gossip(&mut report);
    flocking(&mut report);
    let second = sweep();
    replay(&mut report, &first, &second);
    silent_without_broadcast(&mut report, &first.results);
    synthetic_regression(&mut report);

    let failed: Vec<&String> = report.lines.iter().filter(|(pass, _)| !pass).map(|(_, l)| l).collect();
    println!("{}/{} criteria passed", report.lines.len() - failed.len(), report.lines.len());
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.iter().map(|l| l.as_str()).collect::<Vec<_>>().join("\n"));
}
