//! Hand-computed event timelines and convergence behavior checks.
//!
//! The expected values in this file were derived by hand from the delay
//! constants before the engine existed: each emission happens tau_proc +
//! tau_spike after processing starts, E deliveries land dt_e + dt_dendritic
//! after the emission, I deliveries dt_i + dt_dendritic after it.

use std::collections::BTreeSet;

use spikepath::analysis::{audit_induction, compare_to_oracle, time_to_target};
use spikepath::engine::{
    init_runtimes, run_iteration, run_until_converged, RunConfig, TraceEvent,
};
use spikepath::network::{
    generate_reachable, grid_graph, path_graph, shortest_path_node_set, Environment, GenParams,
    NodeId, NodePick, Point2,
};
use spikepath::protocol::{tag_window, InhibitionMode, TimingParams, TIME_EPS};

fn assert_close(actual: f64, expected: f64) {
    assert!(
        (actual - expected).abs() <= TIME_EPS,
        "time {actual} differs from hand value {expected}"
    );
}

fn assert_trace(actual: &[TraceEvent], expected: &[(f64, u8, &str, u32, u32)]) {
    assert_eq!(
        actual.len(),
        expected.len(),
        "event count mismatch: got {:?}",
        actual
            .iter()
            .map(|e| (e.t, e.kind.clone(), e.from, e.to))
            .collect::<Vec<_>>()
    );
    for (got, &(t, prio, kind, from, to)) in actual.iter().zip(expected) {
        assert_close(got.t, t);
        assert_eq!(
            (got.prio, got.kind.as_str(), got.from, got.to),
            (prio, kind, from, to),
            "mismatch at t = {t}"
        );
    }
}

fn chain(n: usize) -> RunConfig {
    RunConfig::new(
        path_graph(n),
        TimingParams::reference(),
        InhibitionMode::Global,
        NodeId(0),
        vec![NodeId((n - 1) as u32)],
    )
}

#[test]
fn two_node_chain_full_event_timeline() {
    // s -> t, t tagged and adjacent. Iteration 1: s spikes at 10.1, the E
    // reaches t at 16.1, t spikes at 21.2, the I echo lands at 24.2 and the
    // E echo at 27.2; both fall inside the window after s's own emission, so
    // s becomes tagged. The readout then repeats the handshake at tagged
    // speed.
    let cfg = chain(2);
    let mut trace = Vec::new();
    let result = run_until_converged(&cfg, Some(&mut trace)).unwrap();
    assert!(result.converged);
    assert_eq!(result.convergence_iteration, Some(1));
    assert_eq!(result.readout_spiking, vec![NodeId(0), NodeId(1)]);

    let expected: &[(f64, u8, &str, u32, u32)] = &[
        // Iteration 1.
        (10.0, 2, "timer", 0, 0), // processing done
        (10.1, 2, "timer", 0, 0), // emission
        (12.1, 2, "timer", 0, 0), // refractory over
        (16.1, 1, "E", 0, 1),
        (21.1, 2, "timer", 1, 1),
        (21.2, 2, "timer", 1, 1),
        (23.2, 2, "timer", 1, 1),
        (24.2, 0, "I", 1, 0),
        (27.2, 1, "E", 1, 0),
        (34.2, 2, "timer", 0, 0), // s recovers from inhibition
        // Readout iteration: both nodes tagged.
        (5.0, 2, "timer", 0, 0),
        (5.1, 2, "timer", 0, 0),
        (7.1, 2, "timer", 0, 0),
        (8.1, 0, "I", 0, 1),
        (11.1, 1, "E", 0, 1),
        (16.1, 2, "timer", 1, 1),
        (16.2, 2, "timer", 1, 1),
        (18.2, 2, "timer", 1, 1),
        (19.2, 0, "I", 1, 0),
        (22.2, 1, "E", 1, 0),
        (29.2, 2, "timer", 0, 0),
    ];
    assert_trace(&trace, expected);

    let first = &result.iterations[0];
    assert_close(first.spike_time[0].unwrap(), 10.1);
    assert_close(first.spike_time[1].unwrap(), 21.2);
    assert_close(first.ttt.unwrap(), 21.2);
    assert_eq!(first.newly_tagged, vec![NodeId(0)]);
    let readout = result.readout_record.as_ref().unwrap();
    assert_close(readout.spike_time[0].unwrap(), 5.1);
    assert_close(readout.spike_time[1].unwrap(), 16.2);
}

#[test]
fn three_node_chain_tags_one_hop_per_iteration() {
    // s(0) - a(1) - t(2): iteration 1 tags a, iteration 2 tags s,
    // readout activates everything.
    let cfg = chain(3);
    let mut trace = Vec::new();
    let result = run_until_converged(&cfg, Some(&mut trace)).unwrap();
    assert!(result.converged);
    assert_eq!(result.convergence_iteration, Some(2));
    assert_eq!(
        result.readout_spiking,
        vec![NodeId(0), NodeId(1), NodeId(2)]
    );

    // Iteration 1: the wave takes untagged time through a, then the tagged
    // target echoes. a's own emission is at 26.2; the I at 40.3 and E at
    // 43.3 both fall within its window, so a is tagged.
    let it1 = &result.iterations[0];
    assert_close(it1.spike_time[0].unwrap(), 10.1);
    assert_close(it1.spike_time[1].unwrap(), 26.2);
    assert_close(it1.spike_time[2].unwrap(), 37.3);
    assert_close(it1.ttt.unwrap(), 37.3);
    assert_eq!(it1.newly_tagged, vec![NodeId(1)]);

    // Iteration 2: a answers at tagged speed, tagging s; the disinhibited
    // target still spikes, 5 ms sooner than before.
    let it2 = &result.iterations[1];
    assert_close(it2.spike_time[0].unwrap(), 10.1);
    assert_close(it2.spike_time[1].unwrap(), 21.2);
    assert_close(it2.spike_time[2].unwrap(), 32.3);
    assert_close(it2.ttt.unwrap(), 32.3);
    assert_eq!(it2.newly_tagged, vec![NodeId(0)]);

    // Readout: the whole chain at tagged speed.
    let it3 = result.readout_record.as_ref().unwrap();
    assert_close(it3.spike_time[0].unwrap(), 5.1);
    assert_close(it3.spike_time[1].unwrap(), 16.2);
    assert_close(it3.spike_time[2].unwrap(), 27.3);
    assert_close(it3.ttt.unwrap(), 27.3);
    assert!(it3.newly_tagged.is_empty());

    // Message deliveries only (timers elided), in execution order.
    let deliveries: Vec<&TraceEvent> = trace.iter().filter(|e| e.kind != "timer").collect();
    let expected: &[(f64, u8, &str, u32, u32)] = &[
        // Iteration 1.
        (16.1, 1, "E", 0, 1),
        (32.2, 1, "E", 1, 0),
        (32.2, 1, "E", 1, 2),
        (40.3, 0, "I", 2, 0),
        (40.3, 0, "I", 2, 1),
        (43.3, 1, "E", 2, 1),
        // Iteration 2.
        (16.1, 1, "E", 0, 1),
        (24.2, 0, "I", 1, 0),
        (24.2, 0, "I", 1, 2),
        (27.2, 1, "E", 1, 0),
        (27.2, 1, "E", 1, 2),
        (35.3, 0, "I", 2, 0),
        (35.3, 0, "I", 2, 1),
        (38.3, 1, "E", 2, 1),
        // Readout.
        (8.1, 0, "I", 0, 1),
        (8.1, 0, "I", 0, 2),
        (11.1, 1, "E", 0, 1),
        (19.2, 0, "I", 1, 0),
        (19.2, 0, "I", 1, 2),
        (22.2, 1, "E", 1, 0),
        (22.2, 1, "E", 1, 2),
        (30.3, 0, "I", 2, 0),
        (30.3, 0, "I", 2, 1),
        (33.3, 1, "E", 2, 1),
    ];
    let got: Vec<(f64, u8, String, u32, u32)> = deliveries
        .iter()
        .map(|e| (e.t, e.prio, e.kind.clone(), e.from, e.to))
        .collect();
    assert_eq!(got.len(), expected.len(), "delivery count: {got:?}");
    for (g, &(t, prio, kind, from, to)) in deliveries.iter().zip(expected) {
        assert_close(g.t, t);
        assert_eq!((g.prio, g.kind.as_str(), g.from, g.to), (prio, kind, from, to));
    }
}

#[test]
fn zero_dendritic_delay_pair_lands_on_window_boundary() {
    // With dt_dendritic = 0 the window is 15 ms. Measured from the
    // predecessor's emission, the echo arrives with the I at 12 ms plus the
    // responder's spike latency and the E at exactly 15 ms plus that same
    // latency: the inclusive boundary case that must still tag.
    let tp = TimingParams {
        dt_dendritic: 0.0,
        ..TimingParams::reference()
    };
    assert_close(tag_window(&tp).w, 15.0);
    let cfg = RunConfig::new(
        path_graph(2),
        tp,
        InhibitionMode::Global,
        NodeId(0),
        vec![NodeId(1)],
    );
    let mut trace = Vec::new();
    let result = run_until_converged(&cfg, Some(&mut trace)).unwrap();
    assert!(result.converged);
    assert_eq!(result.convergence_iteration, Some(1));

    let emission = 10.1;
    let i_echo = trace.iter().find(|e| e.kind == "I").unwrap();
    let e_echo = trace.iter().find(|e| e.kind == "E" && e.from == 1).unwrap();
    assert_close(i_echo.t - emission, 12.0 + tp.tau_spike);
    assert_close(e_echo.t - emission, 15.0 + tp.tau_spike);
    // The E echo sits exactly on the inclusive window deadline.
    assert_close(e_echo.t, emission + tag_window(&tp).w + tp.tau_spike);
    assert_eq!(result.iterations[0].newly_tagged, vec![NodeId(0)]);
}

#[test]
fn path_graphs_converge_in_exactly_distance_iterations() {
    for n in [3usize, 5, 9, 14] {
        let cfg = chain(n);
        let result = run_until_converged(&cfg, None).unwrap();
        assert!(result.converged, "n = {n}");
        assert_eq!(result.convergence_iteration, Some(n - 1), "n = {n}");
        let all: Vec<NodeId> = (0..n as u32).map(NodeId).collect();
        assert_eq!(result.readout_spiking, all, "n = {n}");
        // TTT decreases by tau_proc_0 - tau_proc_plus per iteration.
        for pair in result.iterations.windows(2) {
            let (a, b) = (pair[0].ttt.unwrap(), pair[1].ttt.unwrap());
            assert_close(a - b, 5.0);
        }
    }
}

#[test]
fn grid_converges_within_distance_and_matches_oracle() {
    let net = grid_graph(10, 10);
    for (source, target) in [(NodeId(0), NodeId(99)), (NodeId(0), NodeId(9))] {
        let cfg = RunConfig::new(
            net.clone(),
            TimingParams::reference(),
            InhibitionMode::Global,
            source,
            vec![target],
        );
        let result = run_until_converged(&cfg, None).unwrap();
        assert!(result.converged);
        let d = spikepath::network::bfs_distances(&net, source)[target.index()].unwrap();
        let conv = result.convergence_iteration.unwrap();
        assert!(conv as u32 <= d);
        assert_eq!(conv as u32, d);
        let oracle = shortest_path_node_set(&net, source, target).unwrap();
        let readout: BTreeSet<NodeId> = result.readout_spiking.iter().copied().collect();
        assert_eq!(readout, oracle);
        assert!(audit_induction(&result.iterations, &net, source, target, cfg.mode).pass);
    }
}

#[test]
fn spatial_run_exact_match_audit_and_monotone_ttt() {
    // Smaller sibling of the full-scale acceptance runs.
    let gp = GenParams {
        n_neurons: 300,
        ..GenParams::reference(42)
    };
    let gen = generate_reachable(
        &Environment::square(),
        &gp,
        NodePick::Near(Point2::new(0.0, 0.0)),
        &[NodePick::Near(Point2::new(1.0, 1.0))],
    )
    .unwrap();
    let cfg = RunConfig::new(
        gen.net,
        TimingParams::reference(),
        InhibitionMode::Global,
        gen.source,
        vec![gen.targets[0]],
    );
    let result = run_until_converged(&cfg, None).unwrap();
    assert!(result.converged);

    let oracle = shortest_path_node_set(&cfg.net, cfg.source, cfg.targets[0]).unwrap();
    let readout: BTreeSet<NodeId> = result.readout_spiking.iter().copied().collect();
    let report = compare_to_oracle(&readout, &oracle);
    assert!(report.exact_match, "missing {:?} extra {:?}", report.missing, report.extra);

    assert!(audit_induction(&result.iterations, &cfg.net, cfg.source, cfg.targets[0], cfg.mode).pass);

    for pair in result.iterations.windows(2) {
        let (a, b) = (pair[0].ttt.unwrap(), pair[1].ttt.unwrap());
        assert!(b <= a + TIME_EPS, "ttt increased: {a} -> {b}");
    }

    // time_to_target agrees with the recorded ttt on every iteration.
    for rec in &result.iterations {
        assert_eq!(time_to_target(rec, &cfg.targets), rec.ttt);
    }
}

#[test]
fn no_inhibition_fails_and_local_converges_with_more_activity() {
    let gp = GenParams {
        n_neurons: 300,
        ..GenParams::reference(7)
    };
    let gen = generate_reachable(
        &Environment::a_maze(),
        &gp,
        NodePick::Near(Point2::new(0.0, 0.0)),
        &[NodePick::Near(Point2::new(1.0, 1.0))],
    )
    .unwrap();
    let base = RunConfig::new(
        gen.net,
        TimingParams::reference(),
        InhibitionMode::Global,
        gen.source,
        vec![gen.targets[0]],
    );

    let global = run_until_converged(&base, None).unwrap();
    assert!(global.converged);

    let local_cfg = RunConfig {
        mode: InhibitionMode::Local,
        ..base.clone()
    };
    let local = run_until_converged(&local_cfg, None).unwrap();
    assert!(local.converged);
    let oracle = shortest_path_node_set(&base.net, base.source, base.targets[0]).unwrap();
    let readout: BTreeSet<NodeId> = local.readout_spiking.iter().copied().collect();
    assert!(oracle.is_subset(&readout));
    // At least one pre-convergence iteration keeps strictly more activity
    // alive under local-only inhibition.
    let conv = global.convergence_iteration.unwrap().min(local.convergence_iteration.unwrap());
    assert!((0..conv - 1)
        .any(|i| local.iterations[i].n_spiked() > global.iterations[i].n_spiked()));

    let mut none_cfg = RunConfig {
        mode: InhibitionMode::None,
        ..base
    };
    none_cfg.max_iterations = 12;
    let none = run_until_converged(&none_cfg, None).unwrap();
    assert!(!none.converged);
    for rec in &none.iterations {
        assert_eq!(rec.tagged_after, none_cfg.targets);
    }
}

#[test]
fn iteration_resets_leave_tags_and_clear_bookkeeping() {
    let cfg = chain(4);
    let mut runtimes = init_runtimes(4, &cfg.targets);
    let mut seq = 0;
    let rec1 = run_iteration(&mut runtimes, &cfg, 1, &mut seq, None).unwrap();
    assert_eq!(rec1.newly_tagged, vec![NodeId(2)]);
    for rt in &runtimes {
        assert!(rt.spike_time.is_none());
        assert!(rt.last_e_sent_at.is_none());
        assert!(!rt.spiked_this_iteration);
    }
    assert!(runtimes[2].tagged && runtimes[3].tagged);
    assert!(!runtimes[0].tagged && !runtimes[1].tagged);
}
