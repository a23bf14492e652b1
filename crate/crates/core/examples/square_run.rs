//! Quick end-to-end check: square arena, reference parameters, global
//! inhibition. Prints per-iteration stats and the oracle comparison.

use std::collections::BTreeSet;

use spikepath::analysis::{audit_induction, compare_to_oracle};
use spikepath::engine::{run_until_converged, RunConfig};
use spikepath::network::{
    generate_reachable, shortest_path_node_set, Environment, GenParams, NodePick, Point2,
};
use spikepath::protocol::{InhibitionMode, TimingParams};

fn main() {
    let seed: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1);
    let mode = match std::env::args().nth(2).as_deref() {
        Some("local") => InhibitionMode::Local,
        Some("none") => InhibitionMode::None,
        _ => InhibitionMode::Global,
    };
    let env = Environment::square();
    let gp = GenParams::reference(seed);
    let gen = generate_reachable(
        &env,
        &gp,
        NodePick::Near(Point2::new(0.0, 0.0)),
        &[NodePick::Near(Point2::new(1.0, 1.0))],
    )
    .unwrap();
    let source = gen.source;
    let target = gen.targets[0];
    println!(
        "seed {} source {} target {} n {}",
        gen.used_seed,
        source,
        target,
        gen.net.len()
    );
    let mut cfg = RunConfig::new(gen.net, TimingParams::reference(), mode, source, vec![target]);
    cfg.max_iterations = 60;
    let t0 = std::time::Instant::now();
    let result = run_until_converged(&cfg, None).unwrap();
    println!("elapsed {:?} converged {}", t0.elapsed(), result.converged);
    for rec in &result.iterations {
        println!(
            "iter {:2}  ttt {:>8.1?}  spiked {:4}  tagged {:4}  new {:3}  quiesced {:8.1}",
            rec.index,
            rec.ttt,
            rec.n_spiked(),
            rec.tagged_after.len(),
            rec.newly_tagged.len(),
            rec.quiesced_at
        );
    }
    if result.converged {
        let oracle = shortest_path_node_set(&cfg.net, source, target).unwrap();
        let readout: BTreeSet<_> = result.readout_spiking.iter().copied().collect();
        let report = compare_to_oracle(&readout, &oracle);
        println!(
            "oracle {} readout {} exact {} jaccard {:.4} missing {:?} extra {:?}",
            oracle.len(),
            readout.len(),
            report.exact_match,
            report.jaccard,
            report.missing.len(),
            report.extra.len()
        );
        let audit = audit_induction(&result.iterations, &cfg.net, source, target, mode);
        println!("audit pass {}", audit.pass);
    }
}
