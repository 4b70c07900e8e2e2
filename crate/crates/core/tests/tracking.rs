use nightpair::pipeline::World;
use nightpair::scenarios;
use nightpair::tracking::{trajectory_gap, RunOptions, Trajectory};
use nightpair::vehicle::{seconds, Mode};

fn world() -> World {
    World::build(scenarios::bundled("straight-road").unwrap().unwrap()).unwrap()
}

#[test]
fn perfect_localization_run_reaches_the_goal() {
    let w = world();
    let mut opts = w.run_options(3);
    opts.perfect_localization = true;
    let run = w.track(Mode::Day, &opts).unwrap();
    assert!(run.completed);
    assert_eq!(run.realized, run.truth);
    assert_eq!(run.log.len(), run.lidar_ticks.len());
    let end = w.desired.samples().last().unwrap().pose;
    let stop = run.truth.samples().last().unwrap().pose;
    let gap = nightpair::geometry::position_distance(&end, &stop);
    // speed is read at the lookahead point, so the ramp ends about one
    // minimum lookahead before the last sample
    let lookahead = w.config.control.lookahead_min;
    assert!(gap < lookahead + 0.5, "stopped {gap} m short");
    let xtrack = trajectory_gap(&run.truth, &w.desired);
    assert!(xtrack.iter().all(|&d| d < 0.05));
    // camera triggers cover exactly the LiDAR run length
    let length = seconds(run.lidar_ticks.last().unwrap().1) + 0.05;
    assert!(seconds(run.camera_triggers.last().unwrap().1) < length);
    assert_eq!(run.camera_triggers.len(), (length * 10.0 - 1e-9).ceil() as usize);
}

#[test]
fn ndt_run_is_seeded_and_localizes_within_centimeters() {
    let w = world();
    let opts = w.run_options(2);
    let a = w.track(Mode::Night, &opts).unwrap();
    let b = w.track(Mode::Night, &opts).unwrap();
    assert_eq!(a.realized, b.realized);
    assert_eq!(a.log, b.log);
    let other = w.track(Mode::Night, &w.run_options(5)).unwrap();
    assert_ne!(a.realized, other.realized);
    for (est, truth) in a.realized.samples().iter().zip(a.truth.samples()) {
        assert!(nightpair::geometry::position_distance(&est.pose, &truth.pose) < 0.03);
    }
    // the realized trajectory round-trips through its text format
    let mut buf = Vec::new();
    a.realized.write(&mut buf).unwrap();
    let back = Trajectory::read(buf.as_slice()).unwrap();
    assert_eq!(back.len(), a.realized.len());
}

#[test]
fn short_duration_truncates_the_run() {
    let w = world();
    let opts = RunOptions {
        duration: num_rational::Ratio::new(3, 1),
        ..w.run_options(1)
    };
    let run = w.track(Mode::Day, &opts).unwrap();
    assert!(!run.completed);
    assert_eq!(run.lidar_ticks.len(), 60);
    assert_eq!(run.camera_triggers.len(), 30);
}
