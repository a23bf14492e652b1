//! Deterministic discrete-event execution of the protocol.
//!
//! One *iteration* is one forward wave: the source is forced into processing
//! at t = 0, events run in total order until the queue empties (quiescence),
//! then all states reset to resting while tags persist. A run repeats
//! iterations until the source becomes tagged, then executes one extra
//! *readout* iteration whose spiking set is the extracted shortest-path node
//! set.

mod queue;

pub use queue::{Event, EventQueue, Payload};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{bfs_distances, NodeId, SpatialNetwork};
use crate::protocol::{
    on_deliver, on_timer, tag_window, InhibitionMode, MessageKind, NeuronRuntime, NeuronState,
    TimerKind, TimingParams,
};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("no target reachable from source node {from}")]
    Unreachable { from: NodeId },
    #[error("iteration {iteration} still active at t_max = {t_max} ms (reverberation or pathological parameters)")]
    IterationTimeout { iteration: usize, t_max: f64 },
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
}

/// Everything one simulation needs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub net: SpatialNetwork,
    pub tp: TimingParams,
    pub mode: InhibitionMode,
    pub source: NodeId,
    pub targets: Vec<NodeId>,
    /// Iteration budget before giving up; defaults to the node count.
    pub max_iterations: usize,
    /// Per-iteration time budget (ms).
    pub t_max_per_iteration: f64,
}

impl RunConfig {
    /// Config with the default budgets derived from the network size.
    pub fn new(
        net: SpatialNetwork,
        tp: TimingParams,
        mode: InhibitionMode,
        source: NodeId,
        targets: Vec<NodeId>,
    ) -> Self {
        let n = net.len();
        let t_max = 10.0 * n as f64 * (tp.tau_proc_0 + tp.dt_e);
        Self {
            net,
            tp,
            mode,
            source,
            targets,
            max_iterations: n,
            t_max_per_iteration: t_max,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        self.tp
            .validate()
            .map_err(|e| EngineError::InvalidConfig(e.to_string()))?;
        if self.targets.is_empty() {
            return Err(EngineError::InvalidConfig("no targets".into()));
        }
        let n = self.net.len();
        if self.source.index() >= n || self.targets.iter().any(|t| t.index() >= n) {
            return Err(EngineError::InvalidConfig("node id out of range".into()));
        }
        if self.max_iterations == 0 {
            return Err(EngineError::InvalidConfig("max_iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// What happened during one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based iteration number; the readout iteration is the last one.
    pub index: usize,
    /// First spike time of any target within this iteration, if one spiked.
    pub ttt: Option<f64>,
    /// Per-node emission instant, `null` for silent nodes.
    pub spike_time: Vec<Option<f64>>,
    /// Tagged set after the iteration, ascending.
    pub tagged_after: Vec<NodeId>,
    /// Tags acquired during this iteration, ascending.
    pub newly_tagged: Vec<NodeId>,
    /// Time of the last executed event.
    pub quiesced_at: f64,
    /// Number of emissions (spikes) in this iteration.
    pub emissions: usize,
}

impl IterationRecord {
    pub fn spiked_nodes(&self) -> Vec<NodeId> {
        self.spike_time
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.map(|_| NodeId(i as u32)))
            .collect()
    }

    pub fn n_spiked(&self) -> usize {
        self.spike_time.iter().flatten().count()
    }
}

/// Result of a full run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// All executed iterations in order. When the run converged the last
    /// entry is the readout iteration.
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
    pub convergence_iteration: Option<usize>,
    /// Nodes that spiked during the readout iteration, ascending.
    pub readout_spiking: Vec<NodeId>,
    pub readout_record: Option<IterationRecord>,
}

/// One executed event, as written to `trace.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub t: f64,
    pub prio: u8,
    pub seq: u64,
    /// "I", "E" or "timer".
    pub kind: String,
    pub from: u32,
    pub to: u32,
}

/// Fresh runtime array with the given targets tagged.
pub fn init_runtimes(n: usize, targets: &[NodeId]) -> Vec<NeuronRuntime> {
    let mut runtimes: Vec<NeuronRuntime> = (0..n).map(|_| NeuronRuntime::new(false)).collect();
    for t in targets {
        runtimes[t.index()].tagged = true;
    }
    runtimes
}

/// Deliveries produced by one emission: an E per out-neighbor, plus I per
/// inhibition mode when the emitter is tagged. The sender never receives its
/// own broadcast.
pub fn emission_deliveries(
    from: NodeId,
    tagged: bool,
    at: f64,
    net: &SpatialNetwork,
    tp: &TimingParams,
    mode: InhibitionMode,
) -> Vec<(f64, NodeId, MessageKind)> {
    let mut out = Vec::new();
    if tagged {
        let t_i = at + tp.delivery_delay(MessageKind::I);
        match mode {
            InhibitionMode::Global => {
                for v in net.node_ids() {
                    if v != from {
                        out.push((t_i, v, MessageKind::I));
                    }
                }
            }
            InhibitionMode::Local => {
                for &v in net.neighbors(from) {
                    out.push((t_i, v, MessageKind::I));
                }
            }
            InhibitionMode::None => {}
        }
    }
    let t_e = at + tp.delivery_delay(MessageKind::E);
    for &v in net.neighbors(from) {
        out.push((t_e, v, MessageKind::E));
    }
    out
}

/// Execute one forward wave over `runtimes`.
///
/// Expects all neurons resting with per-iteration bookkeeping cleared; on
/// return every state has been reset again while tags persist. `seq` is the
/// global insertion counter shared by all iterations of a run.
pub fn run_iteration(
    runtimes: &mut [NeuronRuntime],
    cfg: &RunConfig,
    index: usize,
    seq: &mut u64,
    mut trace: Option<&mut Vec<TraceEvent>>,
) -> Result<IterationRecord, EngineError> {
    debug_assert!(runtimes.iter().all(|r| r.state == NeuronState::Resting));
    let win = tag_window(&cfg.tp);
    let mut queue = EventQueue::starting_at(*seq);
    // Timer handles: a neuron's pending timer is the only one that may fire.
    let mut next_handle: u64 = 1;
    let mut newly_tagged: BTreeSet<NodeId> = BTreeSet::new();
    let mut emissions = 0usize;
    let mut quiesced_at = 0.0f64;

    let schedule_timer =
        |queue: &mut EventQueue, runtimes: &mut [NeuronRuntime], node: NodeId, req: crate::protocol::TimerRequest, next_handle: &mut u64| {
            let handle = *next_handle;
            *next_handle += 1;
            runtimes[node.index()].pending_timer = Some(handle);
            queue.schedule(
                req.at,
                Payload::Timer {
                    node,
                    handle,
                    kind: req.kind,
                },
            );
        };

    // Source injection: forced resting -> processing at t = 0, using its
    // tag-appropriate delay. No synthetic external message is invented.
    {
        let source = cfg.source;
        let rt = &mut runtimes[source.index()];
        rt.state = NeuronState::Processing;
        rt.state_entered_at = 0.0;
        let delay = cfg.tp.processing_delay(rt.tagged);
        schedule_timer(
            &mut queue,
            runtimes,
            source,
            crate::protocol::TimerRequest {
                at: delay,
                kind: TimerKind::ProcessingDone,
            },
            &mut next_handle,
        );
    }

    while let Some(event) = queue.pop_next() {
        if event.time > cfg.t_max_per_iteration {
            return Err(EngineError::IterationTimeout {
                iteration: index,
                t_max: cfg.t_max_per_iteration,
            });
        }
        match event.payload {
            Payload::Timer { node, handle, kind } => {
                if runtimes[node.index()].pending_timer != Some(handle) {
                    // Superseded by a later transition; not an executed event.
                    continue;
                }
                if let Some(trace) = trace.as_deref_mut() {
                    trace.push(TraceEvent {
                        t: event.time,
                        prio: event.priority,
                        seq: event.seq,
                        kind: "timer".into(),
                        from: node.0,
                        to: node.0,
                    });
                }
                quiesced_at = event.time;
                runtimes[node.index()].pending_timer = None;
                let effect = on_timer(&mut runtimes[node.index()], kind, event.time, &cfg.tp);
                if effect.emit {
                    emissions += 1;
                    let tagged = runtimes[node.index()].tagged;
                    for (at, to, msg) in
                        emission_deliveries(node, tagged, event.time, &cfg.net, &cfg.tp, cfg.mode)
                    {
                        queue.schedule(
                            at,
                            Payload::Deliver {
                                to,
                                kind: msg,
                                from: node,
                            },
                        );
                    }
                }
                if let Some(req) = effect.schedule {
                    schedule_timer(&mut queue, runtimes, node, req, &mut next_handle);
                }
            }
            Payload::Deliver { to, kind, from } => {
                if let Some(trace) = trace.as_deref_mut() {
                    trace.push(TraceEvent {
                        t: event.time,
                        prio: event.priority,
                        seq: event.seq,
                        kind: match kind {
                            MessageKind::I => "I".into(),
                            MessageKind::E => "E".into(),
                        },
                        from: from.0,
                        to: to.0,
                    });
                }
                quiesced_at = event.time;
                let effect = on_deliver(&mut runtimes[to.index()], kind, event.time, &cfg.tp, win);
                if effect.became_tagged {
                    newly_tagged.insert(to);
                }
                if let Some(req) = effect.schedule {
                    schedule_timer(&mut queue, runtimes, to, req, &mut next_handle);
                }
            }
        }
    }

    *seq = queue.next_seq();
    let spike_time: Vec<Option<f64>> = runtimes.iter().map(|r| r.spike_time).collect();
    let ttt = cfg
        .targets
        .iter()
        .filter_map(|t| spike_time[t.index()])
        .min_by(f64::total_cmp);
    let tagged_after: Vec<NodeId> = runtimes
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.tagged.then_some(NodeId(i as u32)))
        .collect();
    for rt in runtimes.iter_mut() {
        rt.reset_for_iteration();
    }
    Ok(IterationRecord {
        index,
        ttt,
        spike_time,
        tagged_after,
        newly_tagged: newly_tagged.into_iter().collect(),
        quiesced_at,
        emissions,
    })
}

/// Iterate forward waves until the source is tagged, then run the readout
/// iteration. Returns with `converged = false` once the iteration budget is
/// exhausted (the expected outcome without inhibition).
pub fn run_until_converged(
    cfg: &RunConfig,
    mut trace: Option<&mut Vec<TraceEvent>>,
) -> Result<RunResult, EngineError> {
    cfg.validate()?;
    let dist = bfs_distances(&cfg.net, cfg.source);
    if cfg.targets.iter().all(|t| dist[t.index()].is_none()) {
        return Err(EngineError::Unreachable { from: cfg.source });
    }

    let mut runtimes = init_runtimes(cfg.net.len(), &cfg.targets);
    let mut seq = 0u64;
    let mut iterations = Vec::new();
    for index in 1..=cfg.max_iterations {
        let record = run_iteration(&mut runtimes, cfg, index, &mut seq, trace.as_deref_mut())?;
        let source_tagged = record.tagged_after.binary_search(&cfg.source).is_ok();
        iterations.push(record);
        if source_tagged {
            let readout =
                run_iteration(&mut runtimes, cfg, index + 1, &mut seq, trace.as_deref_mut())?;
            let readout_spiking = readout.spiked_nodes();
            iterations.push(readout.clone());
            return Ok(RunResult {
                iterations,
                converged: true,
                convergence_iteration: Some(index),
                readout_spiking,
                readout_record: Some(readout),
            });
        }
    }
    Ok(RunResult {
        iterations,
        converged: false,
        convergence_iteration: None,
        readout_spiking: Vec::new(),
        readout_record: None,
    })
}
