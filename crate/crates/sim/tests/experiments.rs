use khoploc::harness::NodeStatus;
use khoploc::report::to_csv_string;
use khoploc::{run_experiment, sweep, Algorithm, AnchorMode, DensityMode, ExperimentSpec, RegionMode, SweepAxis, SweepRange};
use khoploc_core::Region;

fn small() -> ExperimentSpec {
    ExperimentSpec {
        region: Region::square(6.0).unwrap(),
        n_total: 110,
        n_anchors: 8,
        anchor_mode: AnchorMode::Random,
        iterations: 10,
        trials: 3,
        ..ExperimentSpec::default()
    }
}

#[test]
fn same_seed_same_output() {
    let spec = small();
    let a = run_experiment(&spec).unwrap();
    let b = run_experiment(&spec).unwrap();
    assert_eq!(a, b);
    assert_eq!(to_csv_string(std::slice::from_ref(&a)), to_csv_string(&[b]));

    let other = run_experiment(&ExperimentSpec { seed: 2, ..spec }).unwrap();
    assert_ne!(a.nodes, other.nodes);
}

#[test]
fn thread_count_does_not_change_results() {
    for density_mode in [DensityMode::Known, DensityMode::Estimated] {
        let base = ExperimentSpec { density_mode, ..small() };
        let one = run_experiment(&ExperimentSpec { threads: 1, ..base.clone() }).unwrap();
        let four = run_experiment(&ExperimentSpec { threads: 4, ..base }).unwrap();
        assert_eq!(to_csv_string(&[one]), to_csv_string(&[four]));
    }
}

#[test]
fn records_are_complete_and_consistent() {
    let spec = small();
    let res = run_experiment(&spec).unwrap();
    let targets = spec.n_total - spec.n_anchors;
    assert_eq!(res.nodes.len(), spec.trials * targets * 2);
    assert_eq!(res.trials.len(), spec.trials * 2);
    for r in &res.nodes {
        assert!(r.node_id >= spec.n_anchors && r.node_id < spec.n_total);
        assert_eq!(r.estimate.is_some(), matches!(r.status, NodeStatus::Ok | NodeStatus::LowConfidence));
        if r.status == NodeStatus::Ok {
            assert!(r.anchors_used >= 3);
        }
    }
    for alg in [Algorithm::KHopLoc, Algorithm::DvHop] {
        let errs = res.errors(alg);
        let mean = errs.iter().sum::<f64>() / errs.len() as f64;
        assert!((res.mean_error(alg).unwrap() - mean).abs() < 1e-12);
        for s in res.summaries(alg) {
            assert_eq!(s.localized + s.low_confidence + s.failed, targets);
        }
    }
    // DV-hop floods twice, kHopLoc once with a known density
    for (k, d) in res.summaries(Algorithm::KHopLoc).zip(res.summaries(Algorithm::DvHop)) {
        assert_eq!(d.messages, 2 * k.messages);
    }
}

#[test]
fn estimated_density_adds_the_parameter_exchange() {
    let known = run_experiment(&small()).unwrap();
    let est = run_experiment(&ExperimentSpec { density_mode: DensityMode::Estimated, ..small() }).unwrap();
    for (k, e) in known.summaries(Algorithm::KHopLoc).zip(est.summaries(Algorithm::KHopLoc)) {
        assert_eq!(e.messages, k.messages + 2 * 110);
    }
}

#[test]
fn assume_square_on_c_shape_runs() {
    let spec = ExperimentSpec {
        region: Region::c_shape(10.0, 2.0).unwrap(),
        model: khoploc_core::ConnectionModel::qudg(1.0, 1.5).unwrap(),
        n_anchors: 14,
        anchor_mode: AnchorMode::Fixed,
        region_mode: RegionMode::AssumeSquare,
        density_mode: DensityMode::Estimated,
        iterations: 10,
        trials: 2,
        algorithms: vec![Algorithm::KHopLoc],
        ..ExperimentSpec::default()
    };
    let res = run_experiment(&spec).unwrap();
    assert!(res.errors(Algorithm::KHopLoc).len() > 400);
}

#[test]
fn sweeps() {
    let spec = small();
    let res = sweep(&spec, SweepAxis::Nodes, SweepRange { start: 90, end: 130, step: 20 }).unwrap();
    assert_eq!(res.iter().map(|r| r.n_total).collect::<Vec<_>>(), vec![90, 110, 130]);
    assert_eq!(res[1], run_experiment(&spec).unwrap());

    let empty = sweep(&spec, SweepAxis::Anchors, SweepRange { start: 10, end: 5, step: 1 }).unwrap();
    assert!(empty.is_empty());
    // invalid sweep points are rejected before anything runs
    assert!(sweep(&spec, SweepAxis::Anchors, SweepRange { start: 2, end: 4, step: 1 }).is_err());
}
