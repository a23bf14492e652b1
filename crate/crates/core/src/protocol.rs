//! Per-neuron timed state machine, message semantics, and predictive tagging.
//!
//! A neuron cycles through five states (resting, processing, spiking,
//! refractory, inhibited) driven by message deliveries and timer expiries.
//! Tagged neurons process faster (`tau_proc_plus` instead of `tau_proc_0`),
//! broadcast inhibitory messages when spiking, and can be pulled out of
//! inhibition by an excitatory message. A neuron becomes tagged when, within
//! the tag window after its own emission, it first receives an inhibitory
//! message and then an excitatory one: only a tagged neighbor's echo can
//! arrive that fast.
//!
//! All transition functions here are pure state-in/effects-out; the engine
//! owns scheduling and message fan-out so a simulation stays single-threaded
//! and deterministic.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute slack (ms) for window and ordering comparisons, immunizing the
/// inclusive boundary cases against float accumulation error.
pub const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("invalid timing parameters: {0}")]
    InvalidTiming(String),
}

/// All delay constants of the protocol, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingParams {
    /// Processing delay of an untagged neuron.
    pub tau_proc_0: f64,
    /// Processing delay of a tagged neuron; strictly below `tau_proc_0`.
    pub tau_proc_plus: f64,
    /// Axonal travel time of inhibitory messages; strictly below `dt_e`.
    pub dt_i: f64,
    /// Axonal travel time of excitatory messages.
    pub dt_e: f64,
    /// Duration of the inhibited state.
    pub tau_inh: f64,
    /// Latency between entering the spiking state and the actual emission.
    pub tau_spike: f64,
    /// Duration of the refractory state.
    pub tau_ref: f64,
    /// Dendritic delay added to every delivery on arrival.
    pub dt_dendritic: f64,
}

impl TimingParams {
    /// The delay constants used throughout the navigation experiments.
    pub fn reference() -> Self {
        Self {
            tau_proc_0: 10.0,
            tau_proc_plus: 5.0,
            dt_i: 2.0,
            dt_e: 5.0,
            tau_inh: 10.0,
            tau_spike: 0.1,
            tau_ref: 2.0,
            dt_dendritic: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        let all = [
            self.tau_proc_0,
            self.tau_proc_plus,
            self.dt_i,
            self.dt_e,
            self.tau_inh,
            self.tau_spike,
            self.tau_ref,
            self.dt_dendritic,
        ];
        if all.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(ProtocolError::InvalidTiming(
                "all delays must be finite and >= 0".into(),
            ));
        }
        if self.dt_i >= self.dt_e {
            return Err(ProtocolError::InvalidTiming(
                "dt_i must be < dt_e (inhibition travels faster)".into(),
            ));
        }
        if self.tau_proc_plus >= self.tau_proc_0 {
            return Err(ProtocolError::InvalidTiming(
                "tau_proc_plus must be < tau_proc_0".into(),
            ));
        }
        Ok(())
    }

    /// Processing delay for the given tag status.
    pub fn processing_delay(&self, tagged: bool) -> f64 {
        if tagged {
            self.tau_proc_plus
        } else {
            self.tau_proc_0
        }
    }

    /// Delivery latency (axonal plus dendritic) for a message kind.
    pub fn delivery_delay(&self, kind: MessageKind) -> f64 {
        let axonal = match kind {
            MessageKind::E => self.dt_e,
            MessageKind::I => self.dt_i,
        };
        axonal + self.dt_dendritic
    }
}

/// Message type exchanged between neurons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MessageKind {
    /// Excitatory; delivered to graph neighbors of the sender.
    E,
    /// Inhibitory; delivery scope set by [`InhibitionMode`].
    I,
}

/// Delivery scope of inhibitory messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InhibitionMode {
    /// I reaches every node except the sender.
    Global,
    /// I reaches graph neighbors only, like E.
    Local,
    /// I is never emitted.
    None,
}

impl std::str::FromStr for InhibitionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "global" => Ok(Self::Global),
            "local" => Ok(Self::Local),
            "none" => Ok(Self::None),
            other => Err(format!(
                "unknown inhibition mode '{other}' (expected global, local or none)"
            )),
        }
    }
}

/// The five states of the machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeuronState {
    Resting,
    Processing,
    Spiking,
    Refractory,
    Inhibited,
}

/// Maximum delay between a neuron's own E emission and a qualifying echo.
///
/// `w = 2 * (dt_e + dt_dendritic) + tau_proc_plus`: the round trip to a
/// tagged neighbor and back, strictly below the `tau_proc_0` round trip an
/// untagged neighbor would need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TagWindow {
    pub w: f64,
}

/// Compute the tag window for a parameter set.
pub fn tag_window(tp: &TimingParams) -> TagWindow {
    TagWindow {
        w: 2.0 * (tp.dt_e + tp.dt_dendritic) + tp.tau_proc_plus,
    }
}

/// Timers a neuron can be waiting on. At most one is pending per neuron;
/// scheduling a new one supersedes the old.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimerKind {
    /// Processing delay elapsed; move to spiking.
    ProcessingDone,
    /// Spike latency elapsed; emit messages and enter refractory.
    EmitDone,
    /// Refractory period over; back to resting.
    RefractoryDone,
    /// Inhibition recovered; back to resting.
    InhibitionDone,
}

/// A timer the engine should schedule for this neuron.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimerRequest {
    pub at: f64,
    pub kind: TimerKind,
}

/// Outcome of a message delivery.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DeliveryEffect {
    /// The neuron crossed the tagging condition on this delivery.
    pub became_tagged: bool,
    /// New pending timer, superseding any previous one.
    pub schedule: Option<TimerRequest>,
}

/// Outcome of a timer expiry.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TimerEffect {
    /// The neuron emits now: the engine must fan out messages.
    pub emit: bool,
    pub schedule: Option<TimerRequest>,
}

/// Mutable per-neuron record.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronRuntime {
    pub state: NeuronState,
    /// Meta-state; monotone within a run, never cleared between iterations.
    pub tagged: bool,
    pub state_entered_at: f64,
    /// Handle of the pending timer; stale timer events are dropped.
    pub pending_timer: Option<u64>,
    /// Emission instant of this neuron's E in the current iteration.
    pub last_e_sent_at: Option<f64>,
    /// An inhibitory message arrived within the window after the emission.
    pub saw_early_i: bool,
    /// An excitatory message arrived within the window, no earlier than the
    /// inhibitory one.
    pub saw_early_e: bool,
    pub spiked_this_iteration: bool,
    pub spike_time: Option<f64>,
}

impl NeuronRuntime {
    pub fn new(tagged: bool) -> Self {
        Self {
            state: NeuronState::Resting,
            tagged,
            state_entered_at: 0.0,
            pending_timer: None,
            last_e_sent_at: None,
            saw_early_i: false,
            saw_early_e: false,
            spiked_this_iteration: false,
            spike_time: None,
        }
    }

    /// Clear per-iteration bookkeeping; the tag persists.
    pub fn reset_for_iteration(&mut self) {
        self.state = NeuronState::Resting;
        self.state_entered_at = 0.0;
        self.pending_timer = None;
        self.last_e_sent_at = None;
        self.saw_early_i = false;
        self.saw_early_e = false;
        self.spiked_this_iteration = false;
        self.spike_time = None;
    }

    fn enter(&mut self, state: NeuronState, now: f64) {
        self.state = state;
        self.state_entered_at = now;
    }
}

/// The predictive tagging condition: an I and then an E both arrived within
/// the window after this neuron's own emission.
pub fn is_tag_condition_met(nr: &NeuronRuntime) -> bool {
    nr.saw_early_i && nr.saw_early_e
}

/// Update tag bookkeeping for an arrival. Runs independently of state: a
/// refractory or inhibited neuron still observes its echo. Returns true if
/// the neuron just became tagged.
fn note_arrival(nr: &mut NeuronRuntime, kind: MessageKind, now: f64, tp: &TimingParams, win: TagWindow) -> bool {
    let Some(sent) = nr.last_e_sent_at else {
        return false;
    };
    // The responder's own spike latency sits between its processing end and
    // its emission, so a tagged neighbor's echo lands exactly at
    // w + tau_spike after our emission; the inclusive boundary must tag.
    if now - sent > win.w + tp.tau_spike + TIME_EPS {
        return false;
    }
    match kind {
        MessageKind::I => nr.saw_early_i = true,
        // An E qualifies only if an early I already arrived: the pair is an
        // echo, and inhibition travels faster (dt_i < dt_e). An E preceding
        // every I is cross traffic from the same wavefront, not an echo.
        MessageKind::E => {
            if nr.saw_early_i {
                nr.saw_early_e = true;
            }
        }
    }
    if is_tag_condition_met(nr) && !nr.tagged {
        nr.tagged = true;
        return true;
    }
    false
}

/// Apply a message delivery: tag bookkeeping first, then the state
/// transition table. Every (state, kind) combination is defined; unlisted
/// ones are explicit no-ops.
pub fn on_deliver(
    nr: &mut NeuronRuntime,
    kind: MessageKind,
    now: f64,
    tp: &TimingParams,
    win: TagWindow,
) -> DeliveryEffect {
    let became_tagged = note_arrival(nr, kind, now, tp, win);
    let mut effect = DeliveryEffect {
        became_tagged,
        schedule: None,
    };
    match (nr.state, kind) {
        (NeuronState::Resting, MessageKind::E) => {
            // One spike per iteration: after its emission a neuron ignores E
            // until the iteration resets, even once recovered to resting.
            if !nr.spiked_this_iteration {
                nr.enter(NeuronState::Processing, now);
                effect.schedule = Some(TimerRequest {
                    at: now + tp.processing_delay(nr.tagged),
                    kind: TimerKind::ProcessingDone,
                });
            }
        }
        (NeuronState::Resting, MessageKind::I) => {
            nr.enter(NeuronState::Inhibited, now);
            effect.schedule = Some(TimerRequest {
                at: now + tp.tau_inh,
                kind: TimerKind::InhibitionDone,
            });
        }
        (NeuronState::Processing, MessageKind::I) => {
            // The pending spike is cancelled; the recovery timer supersedes it.
            nr.enter(NeuronState::Inhibited, now);
            effect.schedule = Some(TimerRequest {
                at: now + tp.tau_inh,
                kind: TimerKind::InhibitionDone,
            });
        }
        (NeuronState::Inhibited, MessageKind::I) => {
            // Stay inhibited, push recovery out.
            effect.schedule = Some(TimerRequest {
                at: now + tp.tau_inh,
                kind: TimerKind::InhibitionDone,
            });
        }
        (NeuronState::Inhibited, MessageKind::E) => {
            // Disinhibition is the tagged neuron's privilege.
            if nr.tagged && !nr.spiked_this_iteration {
                nr.enter(NeuronState::Processing, now);
                effect.schedule = Some(TimerRequest {
                    at: now + tp.processing_delay(nr.tagged),
                    kind: TimerKind::ProcessingDone,
                });
            }
        }
        (NeuronState::Processing, MessageKind::E)
        | (NeuronState::Spiking, _)
        | (NeuronState::Refractory, _) => {}
    }
    effect
}

/// Apply a (non-stale) timer expiry. `EmitDone` reports `emit = true`; the
/// engine fans the messages out and counts the spike.
pub fn on_timer(nr: &mut NeuronRuntime, kind: TimerKind, now: f64, tp: &TimingParams) -> TimerEffect {
    match kind {
        TimerKind::ProcessingDone => {
            debug_assert_eq!(nr.state, NeuronState::Processing);
            nr.enter(NeuronState::Spiking, now);
            TimerEffect {
                emit: false,
                schedule: Some(TimerRequest {
                    at: now + tp.tau_spike,
                    kind: TimerKind::EmitDone,
                }),
            }
        }
        TimerKind::EmitDone => {
            debug_assert_eq!(nr.state, NeuronState::Spiking);
            nr.last_e_sent_at = Some(now);
            nr.saw_early_i = false;
            nr.saw_early_e = false;
            nr.spiked_this_iteration = true;
            nr.spike_time = Some(now);
            nr.enter(NeuronState::Refractory, now);
            TimerEffect {
                emit: true,
                schedule: Some(TimerRequest {
                    at: now + tp.tau_ref,
                    kind: TimerKind::RefractoryDone,
                }),
            }
        }
        TimerKind::RefractoryDone | TimerKind::InhibitionDone => {
            nr.enter(NeuronState::Resting, now);
            TimerEffect::default()
        }
    }
}
