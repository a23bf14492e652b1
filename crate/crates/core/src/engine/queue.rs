//! Deterministic event queue.
//!
//! Events are totally ordered by (time, priority, insertion sequence):
//! inhibitory deliveries before excitatory ones before timer expiries at
//! equal times, FIFO within equal (time, priority). The sequence counter
//! persists across iterations of a run so trace files stay globally ordered.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::network::NodeId;
use crate::protocol::{MessageKind, TimerKind};

/// What happens when an event fires.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Payload {
    Deliver {
        to: NodeId,
        kind: MessageKind,
        from: NodeId,
    },
    Timer {
        node: NodeId,
        handle: u64,
        kind: TimerKind,
    },
}

impl Payload {
    fn priority(&self) -> u8 {
        match self {
            Payload::Deliver {
                kind: MessageKind::I,
                ..
            } => 0,
            Payload::Deliver {
                kind: MessageKind::E,
                ..
            } => 1,
            Payload::Timer { .. } => 2,
        }
    }
}

/// A timestamped scheduled occurrence with a deterministic total order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub priority: u8,
    pub seq: u64,
    pub payload: Payload,
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        // Times are asserted finite on push, so total_cmp is numeric order.
        self.time
            .total_cmp(&other.time)
            .then_with(|| self.priority.cmp(&other.priority))
            .then_with(|| self.seq.cmp(&other.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<std::cmp::Reverse<Event>>,
    next_seq: u64,
}

impl EventQueue {
    /// Queue whose insertion counter starts at `first_seq`.
    pub fn starting_at(first_seq: u64) -> Self {
        Self {
            heap: BinaryHeap::new(),
            next_seq: first_seq,
        }
    }

    pub fn schedule(&mut self, time: f64, payload: Payload) {
        assert!(time.is_finite(), "event scheduled at non-finite time");
        let event = Event {
            time,
            priority: payload.priority(),
            seq: self.next_seq,
            payload,
        };
        self.next_seq += 1;
        self.heap.push(std::cmp::Reverse(event));
    }

    /// Minimum event under the (time, priority, seq) order.
    pub fn pop_next(&mut self) -> Option<Event> {
        self.heap.pop().map(|r| r.0)
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }
}
