use swarm_core::{BehaviorParams, SwarmConfig};
use swarm_session::{snapshot_encode, OperatorInput, RoundRunner, RoundSpec, ServerMessage};

fn spec(seed: u64) -> RoundSpec {
    RoundSpec {
        round_index: 4,
        config: SwarmConfig::new(BehaviorParams::new(10.0, 20.0, 8.0), seed),
        human_robot_id: 7,
        time_limit: 60.0,
    }
}


#[test]
fn target_position_never_leaks_before_it_appears() {
    for seed in 0..20 {
        let mut runner = RoundRunner::new(spec(seed)).unwrap();
        let center = runner.world().target().center;
        let mut tick = 0;
        while runner.world().clock() < 3.0 {
            let bytes = ServerMessage::Snapshot(runner.snapshot(false)).to_json();
            assert!(!bytes.contains("center"), "seed {seed} tick {tick}");
            for needle in [center.x.to_string(), center.y.to_string()] {
                assert!(!bytes.contains(&needle), "seed {seed} tick {tick} leaks {needle}");
            }
            runner.step(Vec::<OperatorInput>::new());
            tick += 1;
        }
        assert_eq!(tick, 30);
        let visible = runner.snapshot(false);
        assert!(visible.target.visible);
        assert_eq!(visible.target.center, Some([center.x, center.y]));
    }
}

#[test]
fn target_can_stay_hidden_until_the_operator_knows_it() {
    let mut runner = RoundRunner::new(spec(3)).unwrap();
    while !runner.is_finished() && !runner.world().robots()[7].is_informed() {
        assert!(runner.snapshot(true).target.center.is_none());
        runner.step(Vec::new());
    }
    if runner.world().robots()[7].is_informed() {
        let s = runner.snapshot(true);
        assert!(s.human_informed && s.target.visible);
    }
}

#[test]
fn snapshot_fields() {
    let runner = RoundRunner::new(spec(1)).unwrap();
    let s = snapshot_encode(runner.world(), 4, 60.0, false);
    assert_eq!(s.round_index, 4);
    assert_eq!(s.robots.len(), 10);
    assert_eq!(s.robots.iter().filter(|r| r.is_human).count(), 1);
    assert!(s.robots[7].is_human);
    assert_eq!(s.remaining, 60.0);
    assert!(!s.human_informed);
}
